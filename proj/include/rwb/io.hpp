#pragma once

#include "rwb/graph.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace rwb {

enum class DatasetFormat { canonical, tudataset };

DatasetFormat parse_format(std::string_view text);

// A node-level task holds one labeled graph; a graph-level task holds many
// graphs with one label each. Labels are remapped to 0..C-1 in ascending
// order of the original values.
struct Dataset {
    std::string name;
    TaskKind task = TaskKind::node;
    std::vector<Graph> graphs;
    std::vector<int> graph_labels;

    const Graph& graph() const { return graphs.front(); }
    int num_classes() const;
};

// Canonical directory layout:
//   edges.tsv     two integer node ids per line (whitespace or comma separated)
//   features.csv  one comma-separated row per node (optional: featureless)
//   labels.csv    one integer per node, or per graph when graph_id.csv exists
//   graph_id.csv  optional; one integer per node naming its graph
// Blank lines and lines starting with '#' are ignored.
Dataset read_canonical(const std::filesystem::path& dir);

// TUDataset flat files DS_A.txt, DS_graph_indicator.txt, DS_graph_labels.txt and
// optional DS_node_labels.txt (one-hot encoded into node features). DS is taken
// from the single *_A.txt file in the directory.
Dataset read_tudataset(const std::filesystem::path& dir);

Dataset read_dataset(const std::filesystem::path& dir, DatasetFormat format);

// Writes a node-level graph in canonical layout (edges once, u < v).
void write_canonical(const std::filesystem::path& dir, const Graph& g);

void write_edge_list(std::ostream& out, const Graph& g);

}  // namespace rwb
