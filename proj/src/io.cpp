#include "probsub/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

namespace probsub {

namespace fs = std::filesystem;

namespace {

struct Line {
    std::size_t number;
    std::vector<std::string_view> tokens;
};

std::vector<Line> tokenize(std::string_view text) {
    std::vector<Line> lines;
    std::size_t number = 0, start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find('\n', start), text.size());
        ++number;
        std::string_view line = text.substr(start, end - start);
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        Line parsed{number, {}};
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
            if (j > i) parsed.tokens.push_back(line.substr(i, j - i));
            i = j;
        }
        if (!parsed.tokens.empty()) lines.push_back(std::move(parsed));
        if (end == text.size()) break;
        start = end + 1;
    }
    return lines;
}

class Located {
public:
    explicit Located(std::string_view source) : source_(source) {}

    [[noreturn]] void fail(std::size_t line, const std::string& message) const {
        throw ParseError(std::string(source_) + ":" + std::to_string(line) + ": " + message);
    }

    double real(const Line& line, std::string_view token) const {
        double v = 0.0;
        const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || end != token.data() + token.size())
            fail(line.number, "'" + std::string(token) + "' is not a number");
        if (!std::isfinite(v)) fail(line.number, "value '" + std::string(token) + "' is not finite");
        return v;
    }

    long integer(const Line& line, std::string_view token) const {
        long v = 0;
        const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || end != token.data() + token.size())
            fail(line.number, "'" + std::string(token) + "' is not an integer");
        return v;
    }

    void expect_count(const Line& line, std::size_t count, const char* what) const {
        if (line.tokens.size() != count)
            fail(line.number, std::string(what) + " line has " + std::to_string(line.tokens.size()) +
                                  " fields, expected " + std::to_string(count));
    }

private:
    std::string_view source_;
};

void append_values(std::string& out, std::span<const double> values) {
    for (double v : values) {
        out += ' ';
        out += format_double(v);
    }
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw Error("cannot format a floating-point value");
    return std::string(buf, end);
}

std::string serialize_graph(const GraphInstance& x) {
    std::string out = "crfgraph 1 " + std::to_string(x.vertex_count()) + " " + std::to_string(x.edge_count()) + " " +
                      std::to_string(x.unary_dim()) + " " + std::to_string(x.pairwise_dim()) + " " +
                      std::to_string(x.label_count()) + "\n";
    for (int k = 0; k < x.vertex_count(); ++k) {
        out += "v " + std::to_string(k);
        append_values(out, x.unary(k));
        out += '\n';
    }
    for (const Edge& e : x.edges()) {
        out += "e " + std::to_string(e.k) + " " + std::to_string(e.l);
        append_values(out, e.feature);
        out += '\n';
    }
    if (const auto& y = x.ground_truth()) {
        out += "y";
        for (Label a : *y) out += " " + std::to_string(a);
        out += '\n';
    }
    return out;
}

GraphInstance parse_graph(std::string_view text, std::string id, std::string_view source) {
    const Located at(source);
    const auto lines = tokenize(text);
    if (lines.empty()) at.fail(1, "empty graph file");
    const Line& head = lines.front();
    if (head.tokens[0] != "crfgraph") at.fail(head.number, "expected a 'crfgraph' header");
    at.expect_count(head, 7, "header");
    if (at.integer(head, head.tokens[1]) != 1) at.fail(head.number, "unsupported graph format version");
    long dims[5];
    for (int i = 0; i < 5; ++i) {
        dims[i] = at.integer(head, head.tokens[std::size_t(i) + 2]);
        if (dims[i] < 0) at.fail(head.number, "header sizes must be nonnegative");
    }
    const long V = dims[0], E = dims[1], du = dims[2], dp = dims[3], L = dims[4];
    if (L < 2) at.fail(head.number, "label count must be at least 2");

    std::vector<std::vector<double>> unary;
    std::vector<Edge> edges;
    std::optional<Labeling> truth;
    std::set<std::pair<int, int>> seen;
    std::size_t i = 1;
    for (; i < lines.size() && lines[i].tokens[0] == "v"; ++i) {
        const Line& line = lines[i];
        at.expect_count(line, std::size_t(2 + du), "vertex");
        if (at.integer(line, line.tokens[1]) != long(unary.size()))
            at.fail(line.number, "vertex index " + std::string(line.tokens[1]) + " out of sequence, expected " +
                                     std::to_string(unary.size()));
        if (long(unary.size()) == V) at.fail(line.number, "more vertex lines than the header declares");
        std::vector<double> phi;
        for (std::size_t t = 2; t < line.tokens.size(); ++t) phi.push_back(at.real(line, line.tokens[t]));
        unary.push_back(std::move(phi));
    }
    if (long(unary.size()) != V)
        at.fail(i < lines.size() ? lines[i].number : lines.back().number,
                "expected " + std::to_string(V) + " vertex lines, found " + std::to_string(unary.size()));
    for (; i < lines.size() && lines[i].tokens[0] == "e"; ++i) {
        const Line& line = lines[i];
        at.expect_count(line, std::size_t(3 + dp), "edge");
        if (long(edges.size()) == E) at.fail(line.number, "more edge lines than the header declares");
        const long k = at.integer(line, line.tokens[1]), l = at.integer(line, line.tokens[2]);
        if (k < 0 || l < 0 || k >= V || l >= V) at.fail(line.number, "edge endpoint outside 0.." + std::to_string(V - 1));
        if (k == l) at.fail(line.number, "edge is a self loop");
        if (!seen.insert({int(std::min(k, l)), int(std::max(k, l))}).second)
            at.fail(line.number, "edge duplicates an earlier edge");
        std::vector<double> phi;
        for (std::size_t t = 3; t < line.tokens.size(); ++t) {
            const double v = at.real(line, line.tokens[t]);
            if (v < 0.0) at.fail(line.number, "pairwise feature " + std::string(line.tokens[t]) + " is negative");
            phi.push_back(v);
        }
        edges.push_back({int(k), int(l), std::move(phi)});
    }
    if (long(edges.size()) != E)
        at.fail(i < lines.size() ? lines[i].number : lines.back().number,
                "expected " + std::to_string(E) + " edge lines, found " + std::to_string(edges.size()));
    if (i < lines.size() && lines[i].tokens[0] == "y") {
        const Line& line = lines[i];
        at.expect_count(line, std::size_t(1 + V), "label");
        Labeling y;
        for (std::size_t t = 1; t < line.tokens.size(); ++t) {
            const long a = at.integer(line, line.tokens[t]);
            if (a < 0 || a >= L) at.fail(line.number, "label " + std::to_string(a) + " outside 0.." + std::to_string(L - 1));
            y.push_back(Label(a));
        }
        truth = std::move(y);
        ++i;
    }
    if (i < lines.size())
        at.fail(lines[i].number, "unexpected '" + std::string(lines[i].tokens[0]) + "' line");
    try {
        return GraphInstance(std::move(id), int(L), int(du), int(dp), std::move(unary), std::move(edges),
                             std::move(truth));
    } catch (const Error& e) {
        throw ParseError(std::string(source) + ": " + e.what());
    }
}

GraphInstance read_graph(const fs::path& path) {
    return parse_graph(read_file(path), path.stem().string(), path.string());
}

void write_graph(const fs::path& path, const GraphInstance& x) { write_file_atomic(path, serialize_graph(x)); }

std::string serialize_model(const ModelFile& model) {
    const ModelShape& s = model.w.shape();
    std::string out = "crfmodel 1 " + std::to_string(s.unary_dim) + " " + std::to_string(s.pairwise_dim) + " " +
                      std::to_string(s.label_count) + " " + to_string(model.regime) + "\n";
    for (double v : model.w.values()) out += format_double(v) + "\n";
    return out;
}

ModelFile parse_model(std::string_view text, std::string_view source) {
    const Located at(source);
    const auto lines = tokenize(text);
    if (lines.empty()) at.fail(1, "empty model file");
    const Line& head = lines.front();
    if (head.tokens[0] != "crfmodel") at.fail(head.number, "expected a 'crfmodel' header");
    at.expect_count(head, 6, "header");
    if (at.integer(head, head.tokens[1]) != 1) at.fail(head.number, "unsupported model format version");
    const long du = at.integer(head, head.tokens[2]), dp = at.integer(head, head.tokens[3]);
    const long L = at.integer(head, head.tokens[4]);
    if (du < 0 || dp < 0) at.fail(head.number, "feature dimensions must be nonnegative");
    if (L < 2) at.fail(head.number, "label count must be at least 2");
    ModelFile model;
    try {
        model.regime = parse_regime(head.tokens[5]);
    } catch (const Error& e) {
        at.fail(head.number, e.what());
    }
    const ModelShape shape{int(L), int(du), int(dp)};
    std::vector<double> flat;
    for (std::size_t i = 1; i < lines.size(); ++i)
        for (std::string_view token : lines[i].tokens) {
            if (flat.size() == shape.size())
                at.fail(lines[i].number, "more weights than the header's " + std::to_string(shape.size()));
            flat.push_back(at.real(lines[i], token));
        }
    if (flat.size() != shape.size())
        at.fail(lines.back().number,
                "expected " + std::to_string(shape.size()) + " weights, found " + std::to_string(flat.size()));
    model.w = WeightVector(shape, std::move(flat));
    return model;
}

ModelFile read_model(const fs::path& path) { return parse_model(read_file(path), path.string()); }

void write_model(const fs::path& path, const ModelFile& model) { write_file_atomic(path, serialize_model(model)); }

void write_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out.write(content.data(), std::streamsize(content.size()));
        if (!out.flush()) throw Error("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot replace '" + path.string() + "': " + ec.message());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void Table::add(std::vector<std::string> row) {
    if (row.size() != header.size())
        throw Error("table row has " + std::to_string(row.size()) + " cells, header has " +
                    std::to_string(header.size()));
    rows.push_back(std::move(row));
}

std::string Table::str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += '\t';
            out += cells[i];
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

std::vector<GraphInstance> read_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("dataset directory '" + dir.string() + "' does not exist");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".graph") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no .graph files in '" + dir.string() + "'");
    std::vector<GraphInstance> out;
    for (const auto& f : files) out.push_back(read_graph(f));
    return out;
}

void write_dataset(const fs::path& dir, const std::vector<GraphInstance>& instances) {
    fs::create_directories(dir);
    for (const auto& x : instances) {
        if (x.id().empty() || x.id().find('/') != std::string::npos)
            throw Error("instance id '" + x.id() + "' cannot be used as a file name");
        write_graph(dir / (x.id() + ".graph"), x);
    }
}

fs::path dataset_part(const fs::path& dir, std::string_view part) {
    const fs::path sub = dir / std::string(part);
    return fs::is_directory(sub) ? sub : dir;
}

}  // namespace probsub
