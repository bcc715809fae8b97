#include "evtfair/tabular.hpp"

#include "evtfair/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace evtfair {

namespace {

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_number(std::string_view text) {
    const std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (*first == '+') ++first;
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last || !std::isfinite(out)) return std::nullopt;
    return out;
}

std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// Reads one logical CSV record, joining physical lines inside quotes.
bool read_record(std::istream& in, std::string& record) {
    record.clear();
    std::string line;
    bool any = false;
    bool in_quotes = false;
    while (std::getline(in, line)) {
        if (any) record += '\n';
        record += line;
        any = true;
        for (char c : line) {
            if (c == '"') in_quotes = !in_quotes;
        }
        if (!in_quotes) break;
    }
    if (!record.empty() && record.back() == '\r') record.pop_back();
    return any;
}

Value value_from_json(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    if (j.is_boolean()) return std::string(j.get<bool>() ? "true" : "false");
    fail(ErrorCode::InvalidSchema, "favorable value must be a string or number");
}

}  // namespace

std::string value_to_string(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
    return std::get<std::string>(v);
}

Schema::Schema(std::vector<Column> columns, std::vector<std::string> protected_columns,
               std::string label, Value favorable)
    : columns_(std::move(columns)),
      protected_(std::move(protected_columns)),
      label_(std::move(label)),
      favorable_(std::move(favorable)) {
    std::set<std::string> names;
    for (const auto& c : columns_) {
        if (c.name.empty()) fail(ErrorCode::InvalidSchema, "empty column name");
        if (!names.insert(c.name).second) fail(ErrorCode::InvalidSchema, "duplicate column '" + c.name + "'");
    }
    if (!find(label_)) fail(ErrorCode::InvalidSchema, "label column '" + label_ + "' not declared");
    for (const auto& p : protected_) {
        const auto idx = find(p);
        if (!idx) fail(ErrorCode::InvalidSchema, "protected column '" + p + "' not declared");
        if (p == label_) fail(ErrorCode::InvalidSchema, "label column cannot be protected");
        if (columns_[*idx].kind != ColumnKind::Categorical)
            fail(ErrorCode::InvalidSchema, "protected column '" + p + "' must be categorical");
    }
    // Favorable value is compared against parsed label cells, so it must
    // carry the label column's kind.
    const auto& label_col = columns_[*find(label_)];
    if (label_col.kind == ColumnKind::Numeric && !std::holds_alternative<double>(favorable_)) {
        const auto parsed = parse_number(std::get<std::string>(favorable_));
        if (!parsed) fail(ErrorCode::InvalidSchema, "favorable value must be numeric for numeric label");
        favorable_ = *parsed;
    } else if (label_col.kind == ColumnKind::Categorical && std::holds_alternative<double>(favorable_)) {
        const double d = std::get<double>(favorable_);
        favorable_ = (d == std::floor(d) && std::abs(d) < 1e15) ? std::to_string(static_cast<long long>(d))
                                                                : format_double(d);
    }
}

Schema Schema::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidSchema, std::string("schema is not valid JSON: ") + e.what());
    }
    try {
        std::vector<Column> cols;
        for (const auto& c : j.at("columns")) {
            const auto kind = c.at("kind").get<std::string>();
            if (kind != "numeric" && kind != "categorical")
                fail(ErrorCode::InvalidSchema, "unknown column kind '" + kind + "'");
            cols.push_back({c.at("name").get<std::string>(),
                            kind == "numeric" ? ColumnKind::Numeric : ColumnKind::Categorical});
        }
        std::vector<std::string> prot = j.value("protected", std::vector<std::string>{});
        return Schema(std::move(cols), std::move(prot), j.at("label").get<std::string>(),
                      value_from_json(j.at("favorable")));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidSchema, std::string("malformed schema: ") + e.what());
    }
}

Schema Schema::load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open schema file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string Schema::to_json_text() const {
    nlohmann::json j;
    j["columns"] = nlohmann::json::array();
    for (const auto& c : columns_)
        j["columns"].push_back({{"name", c.name}, {"kind", c.kind == ColumnKind::Numeric ? "numeric" : "categorical"}});
    j["protected"] = protected_;
    j["label"] = label_;
    if (const auto* d = std::get_if<double>(&favorable_))
        j["favorable"] = *d;
    else
        j["favorable"] = std::get<std::string>(favorable_);
    return j.dump();
}

std::optional<std::size_t> Schema::find(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return i;
    return std::nullopt;
}

std::size_t Schema::index_of(const std::string& name) const {
    const auto idx = find(name);
    if (!idx) fail(ErrorCode::MissingColumn, "column '" + name + "' not in schema");
    return *idx;
}

bool Schema::is_protected(const std::string& name) const {
    return std::find(protected_.begin(), protected_.end(), name) != protected_.end();
}

Dataset::Dataset(Schema schema, std::vector<Record> rows) : schema_(std::move(schema)), rows_(std::move(rows)) {
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].size() != schema_.size())
            fail(ErrorCode::SchemaMismatch, "row " + std::to_string(r) + " has wrong number of values");
        for (std::size_t c = 0; c < schema_.size(); ++c) {
            const bool numeric = schema_.columns()[c].kind == ColumnKind::Numeric;
            const auto& v = rows_[r][c];
            if (numeric != std::holds_alternative<double>(v) ||
                (numeric && !std::isfinite(std::get<double>(v))))
                fail(ErrorCode::TypeMismatch,
                     "row " + std::to_string(r) + ", column '" + schema_.columns()[c].name + "'");
        }
    }
}

std::vector<std::string> Dataset::categories(std::size_t column) const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& row : rows_) {
        const auto& s = std::get<std::string>(row[column]);
        if (seen.insert(s).second) out.push_back(s);
    }
    return out;
}

bool Dataset::is_favorable(const Record& row) const {
    return row[schema_.label_index()] == schema_.favorable();
}

void GroupSpec::validate(const Dataset& ds) const {
    const auto idx = ds.schema().index_of(attribute);
    if (ds.schema().columns()[idx].kind != ColumnKind::Categorical)
        fail(ErrorCode::InvalidGroup, "group attribute '" + attribute + "' is not categorical");
    if (privileged_value == unprivileged_value)
        fail(ErrorCode::InvalidGroup, "privileged and unprivileged values must differ");
    bool has_p = false;
    bool has_u = false;
    for (const auto& row : ds.rows()) {
        const auto& v = std::get<std::string>(row[idx]);
        has_p = has_p || v == privileged_value;
        has_u = has_u || v == unprivileged_value;
    }
    if (!has_p) fail(ErrorCode::InvalidGroup, "value '" + privileged_value + "' does not occur");
    if (!has_u) fail(ErrorCode::InvalidGroup, "value '" + unprivileged_value + "' does not occur");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

Dataset read_csv(std::istream& in, const Schema& schema) {
    std::string record;
    if (!read_record(in, record)) fail(ErrorCode::EmptyDataset, "missing header row");
    const auto header = split_csv_line(record);
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) position.emplace(trim(header[i]), i);

    std::vector<std::size_t> source(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
        const auto it = position.find(schema.columns()[c].name);
        if (it == position.end()) fail(ErrorCode::MissingColumn, "column '" + schema.columns()[c].name + "' missing");
        source[c] = it->second;
    }

    std::vector<Record> rows;
    std::size_t row_number = 0;
    while (read_record(in, record)) {
        if (trim(record).empty()) continue;
        ++row_number;  // 1-based data row
        const auto fields = split_csv_line(record);
        if (fields.size() != header.size())
            fail(ErrorCode::TypeMismatch, "row " + std::to_string(row_number) + ": expected " +
                                              std::to_string(header.size()) + " fields");
        Record row;
        row.reserve(schema.size());
        for (std::size_t c = 0; c < schema.size(); ++c) {
            const auto& field = fields[source[c]];
            if (schema.columns()[c].kind == ColumnKind::Numeric) {
                const auto x = parse_number(field);
                if (!x)
                    fail(ErrorCode::TypeMismatch,
                         "TypeMismatch(" + std::to_string(row_number) + ", " + schema.columns()[c].name + ")");
                row.emplace_back(*x);
            } else {
                row.emplace_back(field);
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(ErrorCode::EmptyDataset, "no data rows");
    return Dataset(schema, std::move(rows));
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    return read_csv(in, schema);
}

namespace {

void write_rows(std::ostream& out, const Schema& schema, const std::vector<Record>& rows,
                std::optional<std::size_t> skip) {
    bool first = true;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (skip && *skip == c) continue;
        if (!first) out << ',';
        out << quote_field(schema.columns()[c].name);
        first = false;
    }
    out << '\n';
    for (const auto& row : rows) {
        first = true;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (skip && *skip == c) continue;
            if (!first) out << ',';
            out << quote_field(value_to_string(row[c]));
            first = false;
        }
        out << '\n';
    }
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& ds) {
    write_rows(out, ds.schema(), ds.rows(), std::nullopt);
}

void write_feature_csv(std::ostream& out, const Schema& schema, const std::vector<Record>& rows) {
    write_rows(out, schema, rows, schema.label_index());
}

std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, SplitRatios ratios, std::uint64_t seed) {
    const bool positive = ratios.train > 0 && ratios.valid > 0 && ratios.test > 0;
    if (!positive || std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9)
        fail(ErrorCode::InvalidRatios, "split fractions must be positive and sum to 1");

    const std::size_t n = ds.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_valid = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.valid));
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.test));
    const std::size_t n_train = n - n_valid - n_test;

    std::vector<Record> train, valid, test;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = ds.rows()[order[i]];
        if (i < n_train)
            train.push_back(row);
        else if (i < n_train + n_valid)
            valid.push_back(row);
        else
            test.push_back(row);
    }
    return {ds.with_rows(std::move(train)), ds.with_rows(std::move(valid)), ds.with_rows(std::move(test))};
}

Record flip_protected(const Record& row, const Schema& schema, const GroupSpec& group) {
    const auto idx = schema.index_of(group.attribute);
    const auto* v = std::get_if<std::string>(&row.at(idx));
    if (v == nullptr) fail(ErrorCode::TypeMismatch, "protected value is not categorical");
    Record out = row;
    if (*v == group.privileged_value)
        out[idx] = group.unprivileged_value;
    else if (*v == group.unprivileged_value)
        out[idx] = group.privileged_value;
    else
        fail(ErrorCode::ValueNotInGroup, "value '" + *v + "' is neither '" + group.privileged_value + "' nor '" +
                                             group.unprivileged_value + "'");
    return out;
}

std::vector<Record> rows_with_value(const Dataset& ds, const std::string& attribute, const std::string& value) {
    const auto idx = ds.schema().index_of(attribute);
    std::vector<Record> out;
    for (const auto& row : ds.rows())
        if (std::get<std::string>(row[idx]) == value) out.push_back(row);
    return out;
}

}  // namespace evtfair
