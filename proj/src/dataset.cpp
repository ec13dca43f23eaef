#include "pathlogit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pathlogit {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t");
        s = a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    }
    return out;
}

double parse_count(const std::string& text, const std::string& where) {
    std::size_t used = 0;
    double c = 0.0;
    try {
        c = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(where + ": count '" + text + "' is not a number");
    }
    if (used != text.size() || !std::isfinite(c) || c < 0.0)
        throw std::invalid_argument(where + ": count must be a nonnegative number, got '" + text + "'");
    return c;
}

}  // namespace

Dataset::Dataset(std::vector<std::string> columns) : columns_(std::move(columns)) {}

std::optional<std::size_t> Dataset::columnIndex(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i] == name) return i;
    return std::nullopt;
}

void Dataset::addRow(std::span<const double> values, double weight) {
    if (values.size() != columns_.size())
        throw std::invalid_argument("row width does not match dataset columns");
    if (!(weight >= 0.0)) throw std::invalid_argument("row weight must be nonnegative");
    data_.insert(data_.end(), values.begin(), values.end());
    weights_.push_back(weight);
}

void Dataset::reserve(std::size_t rows) {
    data_.reserve(rows * columns_.size());
    weights_.reserve(rows);
}

double Dataset::totalWeight() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

Dataset Dataset::collapsed() const {
    std::map<std::vector<double>, double> patterns;
    for (std::size_t r = 0; r < rows(); ++r) {
        const auto rr = row(r);
        patterns[std::vector<double>(rr.begin(), rr.end())] += weights_[r];
    }
    Dataset out(columns_);
    for (const auto& [values, w] : patterns) out.addRow(values, w);
    return out;
}

Dataset read_csv(std::istream& in, const SystemSpec& spec, const std::string& source) {
    std::string line;
    std::size_t lineNo = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        header = split_csv_line(line);
        break;
    }
    if (header.empty()) throw std::invalid_argument(source + ": empty data (no header row)");

    std::vector<std::string> columns;
    std::vector<std::ptrdiff_t> target(header.size(), -1);
    std::optional<std::size_t> countCol;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "count") {
            countCol = i;
        } else if (spec.find(header[i])) {
            if (std::find(columns.begin(), columns.end(), header[i]) != columns.end())
                throw std::invalid_argument(source + ":" + std::to_string(lineNo) +
                                            ": duplicate column '" + header[i] + "'");
            target[i] = static_cast<std::ptrdiff_t>(columns.size());
            columns.push_back(header[i]);
        }
    }
    Dataset data(columns);
    std::vector<double> values(columns.size());
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = source + ":" + std::to_string(lineNo);
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::invalid_argument(where + ": expected " + std::to_string(header.size()) +
                                        " fields, found " + std::to_string(cells.size()));
        double weight = 1.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (countCol && i == *countCol) {
                weight = parse_count(cells[i], where);
            } else if (target[i] >= 0) {
                try {
                    values[static_cast<std::size_t>(target[i])] = spec.parseValue(header[i], cells[i]);
                } catch (const std::invalid_argument& e) {
                    throw std::invalid_argument(where + ": " + e.what());
                }
            }
        }
        data.addRow(values, weight);
    }
    if (data.empty()) throw std::invalid_argument(source + ": empty data (no rows)");
    return data;
}

Dataset read_json(const nlohmann::json& doc, const SystemSpec& spec) {
    const auto& rows = doc.is_object() && doc.contains("rows") ? doc.at("rows") : doc;
    if (!rows.is_array() || rows.empty()) throw std::invalid_argument("empty data");
    std::vector<std::string> columns;
    for (const auto& [key, _] : rows.front().items())
        if (key != "count" && spec.find(key)) columns.push_back(key);
    Dataset data(columns);
    std::vector<double> values(columns.size());
    std::size_t idx = 0;
    for (const auto& r : rows) {
        const std::string where = "row " + std::to_string(idx++);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (!r.contains(columns[c]))
                throw std::invalid_argument(where + ": missing '" + columns[c] + "'");
            const auto& cell = r.at(columns[c]);
            const std::string text = cell.is_string() ? cell.get<std::string>() : cell.dump();
            try {
                values[c] = spec.parseValue(columns[c], text);
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument(where + ": " + e.what());
            }
        }
        double weight = 1.0;
        if (r.contains("count")) {
            const auto& cell = r.at("count");
            weight = parse_count(cell.is_string() ? cell.get<std::string>() : cell.dump(), where);
        }
        data.addRow(values, weight);
    }
    return data;
}

Dataset load_dataset(const std::filesystem::path& path, const SystemSpec& spec) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open data file " + path.string());
    if (path.extension() == ".json") {
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument(path.string() + ": " + e.what());
        }
        try {
            return read_json(doc, spec);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path.string() + ": " + e.what());
        }
    }
    return read_csv(in, spec, path.string());
}

void write_csv(std::ostream& out, const Dataset& data, const SystemSpec& spec) {
    for (const auto& c : data.columns()) out << c << ',';
    out << "count\n";
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < data.columns().size(); ++c)
            out << spec.formatValue(data.columns()[c], data.value(r, c)) << ',';
        out << data.weight(r) << '\n';
    }
}

}  // namespace pathlogit
