#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "probsub/constraints.hpp"
#include "probsub/model.hpp"

namespace probsub {

/// A malformed file; the message starts with "<source>:<line>: ".
class ParseError : public Error {
public:
    using Error::Error;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// Graph files:
//   crfgraph 1 <|V|> <|E|> <d_u> <d_p> <|L|>
//   v <idx> <d_u floats>        |V| lines, idx = 0, 1, ...
//   e <k> <l> <d_p floats>      |E| lines
//   y <|V| labels>              optional
// '#' starts a comment. The instance id is not stored in the file; readers
// take it from the file name.
std::string serialize_graph(const GraphInstance& x);
GraphInstance parse_graph(std::string_view text, std::string id, std::string_view source = "<graph>");

GraphInstance read_graph(const std::filesystem::path& path);
void write_graph(const std::filesystem::path& path, const GraphInstance& x);

// Model files:
//   crfmodel 1 <d_u> <d_p> <|L|> <regime>
// followed by the flat weight vector in WeightVector order, one value per line.
struct ModelFile {
    WeightVector w;
    ConstraintRegime regime = ConstraintRegime::C4;
};

std::string serialize_model(const ModelFile& model);
ModelFile parse_model(std::string_view text, std::string_view source = "<model>");

ModelFile read_model(const std::filesystem::path& path);
void write_model(const std::filesystem::path& path, const ModelFile& model);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Tab-separated table with a one-line header.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    std::string str() const;
};

// Dataset directories hold one "<id>.graph" file per instance, read in file
// name order. A generated dataset with a split has "train" and "test"
// subdirectories.
std::vector<GraphInstance> read_dataset(const std::filesystem::path& dir);
void write_dataset(const std::filesystem::path& dir, const std::vector<GraphInstance>& instances);

/// dir/<part> when that subdirectory exists, otherwise dir itself.
std::filesystem::path dataset_part(const std::filesystem::path& dir, std::string_view part);

}  // namespace probsub
