#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathlogit/model.hpp"

namespace pathlogit {

/// Individual records (unit weights) or weighted covariate patterns.
/// Categorical values are stored as level indices.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<std::string> columns);

    const std::vector<std::string>& columns() const { return columns_; }
    std::optional<std::size_t> columnIndex(std::string_view name) const;

    void addRow(std::span<const double> values, double weight = 1.0);
    void reserve(std::size_t rows);

    std::size_t rows() const { return weights_.size(); }
    bool empty() const { return weights_.empty(); }
    double value(std::size_t row, std::size_t col) const { return data_[row * columns_.size() + col]; }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(data_).subspan(r * columns_.size(), columns_.size());
    }
    double weight(std::size_t row) const { return weights_[row]; }
    double totalWeight() const;

    /// Merges identical rows into weighted patterns.
    Dataset collapsed() const;

private:
    std::vector<std::string> columns_;
    std::vector<double> data_;
    std::vector<double> weights_;
};

/// CSV with a header row. A `count` column turns rows into weighted patterns.
Dataset read_csv(std::istream& in, const SystemSpec& spec, const std::string& source = "<csv>");

/// Array of objects, one per row or pattern, optionally with a `count` member.
Dataset read_json(const nlohmann::json& doc, const SystemSpec& spec);

/// Dispatches on the extension (.json or anything else as CSV).
Dataset load_dataset(const std::filesystem::path& path, const SystemSpec& spec);

void write_csv(std::ostream& out, const Dataset& data, const SystemSpec& spec);

}  // namespace pathlogit
