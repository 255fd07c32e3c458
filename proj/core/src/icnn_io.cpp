#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bess/icnn.hpp"

namespace bess::icnn {

namespace {

void write_number(std::ostream& os, double value) {
    os << std::setprecision(17) << value;
}

void write_row_major(std::ostream& os, const Eigen::MatrixXd& m) {
    os << '[';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (r > 0) os << ", ";
        os << '[';
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c > 0) os << ", ";
            write_number(os, m(r, c));
        }
        os << ']';
    }
    os << ']';
}

Eigen::MatrixXd read_matrix(const nlohmann::json& rows, const char* what) {
    if (!rows.is_array()) throw StructureError(std::string(what) + " must be an array of rows");
    const auto n_rows = static_cast<Eigen::Index>(rows.size());
    const auto n_cols = n_rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd m(n_rows, n_cols);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n_cols) {
            throw StructureError(std::string(what) + " rows must be arrays of equal length");
        }
        for (Eigen::Index c = 0; c < n_cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

}  // namespace

std::string to_json(const Icnn& net) {
    std::ostringstream os;
    os << "{\n  \"widths\": [";
    const auto widths = net.widths();
    for (std::size_t i = 0; i < widths.size(); ++i) os << (i > 0 ? ", " : "") << widths[i];
    os << "],\n  \"layers\": [\n";
    const auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& layer = layers[i];
        os << "    {\"W\": ";
        write_row_major(os, layer.W);
        os << ", \"D\": ";
        write_row_major(os, layer.D);
        os << ", \"b\": [";
        for (Eigen::Index r = 0; r < layer.b.size(); ++r) {
            if (r > 0) os << ", ";
            write_number(os, layer.b(r));
        }
        os << "]}" << (i + 1 < layers.size() ? "," : "") << '\n';
    }
    os << "  ]\n}\n";
    return os.str();
}

Icnn from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw StructureError(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!doc.contains("layers") || !doc["layers"].is_array()) throw StructureError("model file lacks a layers array");
    std::vector<Layer> layers;
    try {
        for (const auto& entry : doc["layers"]) {
            Layer layer;
            layer.W = read_matrix(entry.at("W"), "W");
            layer.D = read_matrix(entry.at("D"), "D");
            const auto& b = entry.at("b");
            layer.b.resize(static_cast<Eigen::Index>(b.size()));
            for (std::size_t r = 0; r < b.size(); ++r) layer.b(static_cast<Eigen::Index>(r)) = b[r].get<double>();
            layers.push_back(std::move(layer));
        }
    } catch (const nlohmann::json::exception& e) {
        throw StructureError(std::string("malformed layer in model file: ") + e.what());
    }
    Icnn net(std::move(layers));
    if (doc.contains("widths")) {
        if (doc["widths"].get<std::vector<int>>() != net.widths()) {
            throw StructureError("model widths do not match the layer shapes");
        }
    }
    return net;
}

void save_model(const Icnn& net, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << to_json(net);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

Icnn load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json(buffer.str());
}

}  // namespace bess::icnn
