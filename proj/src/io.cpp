#include "rwb/io.hpp"

#include "rwb/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>

namespace fs = std::filesystem;

namespace rwb {

namespace {

struct Line {
    std::size_t number;
    std::vector<std::string_view> fields;
};

// Reads a delimited text file; commas, tabs and spaces all separate fields.
class TextTable {
public:
    explicit TextTable(const fs::path& path) : path_(path) {
        std::ifstream in(path);
        if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto first = line.find_first_not_of(" \t");
            if (first == std::string::npos || line[first] == '#') continue;
            storage_.push_back(std::move(line));
            numbers_.push_back(number);
        }
        for (std::size_t i = 0; i < storage_.size(); ++i) {
            Line l{numbers_[i], {}};
            std::string_view s = storage_[i];
            std::size_t pos = 0;
            while (pos < s.size()) {
                while (pos < s.size() && is_sep(s[pos])) ++pos;
                if (pos >= s.size()) break;
                std::size_t end = pos;
                while (end < s.size() && !is_sep(s[end])) ++end;
                l.fields.push_back(s.substr(pos, end - pos));
                pos = end;
            }
            lines_.push_back(std::move(l));
        }
    }

    const std::vector<Line>& lines() const { return lines_; }

    [[noreturn]] void fail(const Line& l, std::string_view what) const {
        throw InputError(fmt::format("{}:{}: {}", path_.string(), l.number, what));
    }

    std::int64_t integer(const Line& l, std::size_t col) const {
        if (col >= l.fields.size()) fail(l, fmt::format("expected at least {} fields", col + 1));
        const std::string_view f = l.fields[col];
        std::int64_t value = 0;
        const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
        if (ec != std::errc{} || ptr != f.data() + f.size()) {
            fail(l, fmt::format("'{}' is not an integer", f));
        }
        return value;
    }

    double real(const Line& l, std::size_t col) const {
        const std::string_view f = l.fields[col];
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
        if (ec != std::errc{} || ptr != f.data() + f.size()) {
            fail(l, fmt::format("'{}' is not a number", f));
        }
        return value;
    }

private:
    static bool is_sep(char c) { return c == ',' || c == ' ' || c == '\t'; }

    fs::path path_;
    std::vector<std::string> storage_;
    std::vector<std::size_t> numbers_;
    std::vector<Line> lines_;
};

std::vector<std::int64_t> read_int_column(const fs::path& path) {
    const TextTable t(path);
    std::vector<std::int64_t> out;
    out.reserve(t.lines().size());
    for (const Line& l : t.lines()) {
        if (l.fields.size() != 1) t.fail(l, "expected exactly one integer");
        out.push_back(t.integer(l, 0));
    }
    return out;
}

// Maps arbitrary integer labels onto 0..C-1 in ascending order of value.
std::vector<int> dense_labels(const std::vector<std::int64_t>& raw) {
    std::map<std::int64_t, int> index;
    for (std::int64_t y : raw) index.emplace(y, 0);
    int next = 0;
    for (auto& [value, id] : index) id = next++;
    std::vector<int> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = index.at(raw[i]);
    return out;
}

}  // namespace

DatasetFormat parse_format(std::string_view text) {
    if (text == "canonical") return DatasetFormat::canonical;
    if (text == "tudataset") return DatasetFormat::tudataset;
    throw ConfigError(fmt::format("unknown dataset format '{}'", text));
}

int Dataset::num_classes() const {
    if (task == TaskKind::graph) {
        return graph_labels.empty() ? 0 : *std::max_element(graph_labels.begin(), graph_labels.end()) + 1;
    }
    return graphs.empty() ? 0 : graphs.front().num_classes();
}

Dataset read_canonical(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InputError(fmt::format("{} is not a directory", dir.string()));

    const TextTable edge_table(dir / "edges.tsv");
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    edges.reserve(edge_table.lines().size());
    std::int64_t max_id = -1;
    for (const Line& l : edge_table.lines()) {
        if (l.fields.size() != 2) edge_table.fail(l, "expected two node ids");
        const std::int64_t a = edge_table.integer(l, 0);
        const std::int64_t b = edge_table.integer(l, 1);
        if (a < 0 || b < 0) edge_table.fail(l, "negative node id");
        max_id = std::max({max_id, a, b});
        edges.emplace_back(a, b);
    }

    const bool collection = fs::exists(dir / "graph_id.csv");
    std::vector<std::int64_t> graph_id;
    if (collection) graph_id = read_int_column(dir / "graph_id.csv");

    std::vector<std::int64_t> raw_labels;
    const bool has_labels = fs::exists(dir / "labels.csv");
    if (has_labels) raw_labels = read_int_column(dir / "labels.csv");

    Eigen::MatrixXd features;
    if (fs::exists(dir / "features.csv")) {
        const TextTable ft(dir / "features.csv");
        const auto rows = static_cast<Eigen::Index>(ft.lines().size());
        const auto cols = rows > 0 ? static_cast<Eigen::Index>(ft.lines().front().fields.size()) : 0;
        features.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const Line& l = ft.lines()[static_cast<std::size_t>(r)];
            if (static_cast<Eigen::Index>(l.fields.size()) != cols) {
                ft.fail(l, fmt::format("expected {} feature columns, found {}", cols, l.fields.size()));
            }
            for (Eigen::Index c = 0; c < cols; ++c) features(r, c) = ft.real(l, static_cast<std::size_t>(c));
        }
    } else {
        std::int64_t n = max_id + 1;
        if (collection) n = std::max<std::int64_t>(n, static_cast<std::int64_t>(graph_id.size()));
        if (!collection && has_labels) n = std::max<std::int64_t>(n, static_cast<std::int64_t>(raw_labels.size()));
        features.resize(n, 0);
    }
    const auto n = static_cast<std::int64_t>(features.rows());
    if (max_id >= n) {
        throw InputError(fmt::format("{}: node id {} exceeds the {} rows of features.csv",
                                     (dir / "edges.tsv").string(), max_id, n));
    }

    Dataset ds;
    ds.name = dir.filename().string();
    if (ds.name.empty()) ds.name = dir.parent_path().filename().string();

    if (!collection) {
        ds.task = TaskKind::node;
        std::optional<std::vector<int>> labels;
        if (has_labels) {
            if (static_cast<std::int64_t>(raw_labels.size()) != n) {
                throw InputError(fmt::format("{}: {} labels for {} nodes",
                                             (dir / "labels.csv").string(), raw_labels.size(), n));
            }
            labels = dense_labels(raw_labels);
        }
        ds.graphs.push_back(build_graph(edges, std::move(features), std::move(labels), ds.name));
        return ds;
    }

    ds.task = TaskKind::graph;
    if (static_cast<std::int64_t>(graph_id.size()) != n) {
        throw InputError(fmt::format("{}: {} entries for {} nodes", (dir / "graph_id.csv").string(),
                                     graph_id.size(), n));
    }
    // Graph ids are mapped densely in ascending order.
    const std::vector<int> gid = dense_labels(graph_id);
    const int num_graphs = gid.empty() ? 0 : *std::max_element(gid.begin(), gid.end()) + 1;
    if (has_labels && static_cast<int>(raw_labels.size()) != num_graphs) {
        throw InputError(fmt::format("{}: {} labels for {} graphs", (dir / "labels.csv").string(),
                                     raw_labels.size(), num_graphs));
    }
    std::vector<std::vector<std::int64_t>> members(static_cast<std::size_t>(num_graphs));
    std::vector<std::int64_t> local(static_cast<std::size_t>(n));
    for (std::int64_t v = 0; v < n; ++v) {
        auto& m = members[gid[v]];
        local[v] = static_cast<std::int64_t>(m.size());
        m.push_back(v);
    }
    std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> local_edges(members.size());
    for (const auto& [a, b] : edges) {
        if (gid[a] != gid[b]) {
            throw InputError(fmt::format("{}: edge ({}, {}) joins different graphs",
                                         (dir / "edges.tsv").string(), a, b));
        }
        local_edges[gid[a]].emplace_back(local[a], local[b]);
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
        Eigen::MatrixXd f(static_cast<Eigen::Index>(members[i].size()), features.cols());
        for (std::size_t r = 0; r < members[i].size(); ++r) {
            f.row(static_cast<Eigen::Index>(r)) = features.row(members[i][r]);
        }
        ds.graphs.push_back(build_graph(local_edges[i], std::move(f), std::nullopt,
                                        fmt::format("{}#{}", ds.name, i)));
    }
    if (has_labels) ds.graph_labels = dense_labels(raw_labels);
    return ds;
}

Dataset read_tudataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InputError(fmt::format("{} is not a directory", dir.string()));
    std::string prefix;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string fname = entry.path().filename().string();
        if (fname.size() > 6 && fname.ends_with("_A.txt")) {
            if (!prefix.empty()) throw InputError(fmt::format("{}: several *_A.txt files", dir.string()));
            prefix = fname.substr(0, fname.size() - 6);
        }
    }
    if (prefix.empty()) throw InputError(fmt::format("{}: no *_A.txt file", dir.string()));
    const auto file = [&](std::string_view suffix) { return dir / (prefix + std::string(suffix)); };

    const std::vector<std::int64_t> indicator = read_int_column(file("_graph_indicator.txt"));
    const auto n = static_cast<std::int64_t>(indicator.size());
    const std::vector<int> gid = dense_labels(indicator);
    const int num_graphs = gid.empty() ? 0 : *std::max_element(gid.begin(), gid.end()) + 1;

    const std::vector<std::int64_t> raw_graph_labels = read_int_column(file("_graph_labels.txt"));
    if (static_cast<int>(raw_graph_labels.size()) != num_graphs) {
        throw InputError(fmt::format("{}: {} labels for {} graphs", file("_graph_labels.txt").string(),
                                     raw_graph_labels.size(), num_graphs));
    }

    Eigen::MatrixXd features(n, 0);
    if (fs::exists(file("_node_labels.txt"))) {
        const TextTable t(file("_node_labels.txt"));
        if (static_cast<std::int64_t>(t.lines().size()) != n) {
            throw InputError(fmt::format("{}: {} node labels for {} nodes",
                                         file("_node_labels.txt").string(), t.lines().size(), n));
        }
        std::vector<std::int64_t> raw;
        raw.reserve(t.lines().size());
        for (const Line& l : t.lines()) raw.push_back(t.integer(l, 0));
        const std::vector<int> cls = dense_labels(raw);
        const int width = cls.empty() ? 0 : *std::max_element(cls.begin(), cls.end()) + 1;
        features = Eigen::MatrixXd::Zero(n, width);
        for (std::int64_t v = 0; v < n; ++v) features(v, cls[v]) = 1.0;
    }

    std::vector<std::vector<std::int64_t>> members(static_cast<std::size_t>(num_graphs));
    std::vector<std::int64_t> local(static_cast<std::size_t>(n));
    for (std::int64_t v = 0; v < n; ++v) {
        auto& m = members[gid[v]];
        local[v] = static_cast<std::int64_t>(m.size());
        m.push_back(v);
    }

    const TextTable at(file("_A.txt"));
    std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> local_edges(members.size());
    for (const Line& l : at.lines()) {
        if (l.fields.size() != 2) at.fail(l, "expected two node ids");
        // TUDataset node ids are 1-based.
        const std::int64_t a = at.integer(l, 0) - 1;
        const std::int64_t b = at.integer(l, 1) - 1;
        if (a < 0 || b < 0 || a >= n || b >= n) at.fail(l, "node id out of range");
        if (gid[a] != gid[b]) at.fail(l, "edge joins different graphs");
        local_edges[gid[a]].emplace_back(local[a], local[b]);
    }

    Dataset ds;
    ds.name = prefix;
    ds.task = TaskKind::graph;
    for (std::size_t i = 0; i < members.size(); ++i) {
        Eigen::MatrixXd f(static_cast<Eigen::Index>(members[i].size()), features.cols());
        for (std::size_t r = 0; r < members[i].size(); ++r) {
            f.row(static_cast<Eigen::Index>(r)) = features.row(members[i][r]);
        }
        ds.graphs.push_back(build_graph(local_edges[i], std::move(f), std::nullopt,
                                        fmt::format("{}#{}", prefix, i)));
    }
    ds.graph_labels = dense_labels(raw_graph_labels);
    return ds;
}

Dataset read_dataset(const fs::path& dir, DatasetFormat format) {
    return format == DatasetFormat::canonical ? read_canonical(dir) : read_tudataset(dir);
}

void write_edge_list(std::ostream& out, const Graph& g) {
    for (const Edge& e : g.edges()) out << e.u << '\t' << e.v << '\n';
}

void write_canonical(const fs::path& dir, const Graph& g) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "edges.tsv");
        write_edge_list(out, g);
    }
    if (g.features().cols() > 0) {
        std::ofstream out(dir / "features.csv");
        for (Eigen::Index r = 0; r < g.features().rows(); ++r) {
            for (Eigen::Index c = 0; c < g.features().cols(); ++c) {
                if (c > 0) out << ',';
                out << fmt::format("{}", g.features()(r, c));
            }
            out << '\n';
        }
    }
    if (g.labels()) {
        std::ofstream out(dir / "labels.csv");
        for (int y : *g.labels()) out << y << '\n';
    }
}

}  // namespace rwb
