#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace evtfair {

enum class ColumnKind { Numeric, Categorical };

// A cell is either a finite double (numeric column) or a category label.
using Value = std::variant<double, std::string>;
using Record = std::vector<Value>;

std::string value_to_string(const Value& v);

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;

    bool operator==(const Column&) const = default;
};

class Schema {
public:
    Schema() = default;
    Schema(std::vector<Column> columns, std::vector<std::string> protected_columns,
           std::string label, Value favorable);

    static Schema from_json_text(const std::string& text);
    static Schema load_json(const std::filesystem::path& path);
    std::string to_json_text() const;

    const std::vector<Column>& columns() const noexcept { return columns_; }
    const std::vector<std::string>& protected_columns() const noexcept { return protected_; }
    const std::string& label() const noexcept { return label_; }
    const Value& favorable() const noexcept { return favorable_; }

    std::size_t size() const noexcept { return columns_.size(); }
    std::optional<std::size_t> find(const std::string& name) const;
    // Throws MissingColumn when absent.
    std::size_t index_of(const std::string& name) const;
    std::size_t label_index() const { return index_of(label_); }
    bool is_protected(const std::string& name) const;

    bool operator==(const Schema&) const = default;

private:
    std::vector<Column> columns_;
    std::vector<std::string> protected_;
    std::string label_;
    Value favorable_;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(Schema schema, std::vector<Record> rows);

    const Schema& schema() const noexcept { return schema_; }
    const std::vector<Record>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }

    // Values of a categorical column in first-seen order.
    std::vector<std::string> categories(std::size_t column) const;
    bool is_favorable(const Record& row) const;

    Dataset with_rows(std::vector<Record> rows) const { return Dataset(schema_, std::move(rows)); }

    bool operator==(const Dataset&) const = default;

private:
    Schema schema_;
    std::vector<Record> rows_;
};

struct GroupSpec {
    std::string attribute;
    std::string privileged_value;
    std::string unprivileged_value;

    // Checks both values occur in ds and are distinct; throws InvalidGroup.
    void validate(const Dataset& ds) const;
    bool contains(const std::string& value) const {
        return value == privileged_value || value == unprivileged_value;
    }
};

Dataset read_csv(std::istream& in, const Schema& schema);
Dataset load_csv(const std::filesystem::path& path, const Schema& schema);
void write_csv(std::ostream& out, const Dataset& ds);
// Header + rows without the label column (external model input format).
void write_feature_csv(std::ostream& out, const Schema& schema, const std::vector<Record>& rows);

// RFC-4180 field splitting for one logical record; exposed for tests.
std::vector<std::string> split_csv_line(const std::string& line);

struct SplitRatios {
    double train = 0.6;
    double valid = 0.2;
    double test = 0.2;
};

std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, SplitRatios ratios, std::uint64_t seed);

Record flip_protected(const Record& row, const Schema& schema, const GroupSpec& group);

// Rows whose value at group.attribute equals `value`.
std::vector<Record> rows_with_value(const Dataset& ds, const std::string& attribute,
                                    const std::string& value);

}  // namespace evtfair
