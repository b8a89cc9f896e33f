#include "causalfuzz/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "causalfuzz/errors.hpp"
#include "causalfuzz/rng.hpp"

namespace causalfuzz {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open file: " + path);
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// RFC-4180 style field splitting: quoted fields may contain the delimiter,
// doubled quotes, and newlines.
std::vector<std::vector<std::string>> split_records(const std::string& text, char delimiter) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
            any = true;
        } else if (c == delimiter) {
            fields.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                fields.push_back(std::move(field));
                records.push_back(std::move(fields));
            }
            field.clear();
            fields.clear();
            any = false;
        } else {
            field.push_back(c);
            any = true;
        }
    }
    if (any || !field.empty()) {
        fields.push_back(std::move(field));
        records.push_back(std::move(fields));
    }
    return records;
}

bool parse_number(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end && begin != end;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

bool Dataset::has_column(const std::string& name) const {
    return std::any_of(schema.begin(), schema.end(),
                       [&](const ColumnSpec& c) { return c.name == name; });
}

std::size_t Dataset::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].name == name) return i;
    }
    throw ConfigError("column not found: " + name);
}

std::vector<double> Dataset::column(const std::string& name) const {
    std::size_t idx = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[idx]);
    return out;
}

void Dataset::validate() const {
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != schema.size()) {
            throw ConfigError("row " + std::to_string(r + 1) + " has " +
                              std::to_string(rows[r].size()) + " fields, expected " +
                              std::to_string(schema.size()));
        }
        for (std::size_t c = 0; c < schema.size(); ++c) {
            double v = rows[r][c];
            if (!std::isfinite(v)) {
                throw ConfigError("non-finite value in column '" + schema[c].name + "' row " +
                                  std::to_string(r + 1));
            }
            if (schema[c].kind == ColumnKind::binary && v != 0.0 && v != 1.0) {
                throw ConfigError("binary column '" + schema[c].name + "' has value " +
                                  format_double(v) + " at row " + std::to_string(r + 1));
            }
        }
    }
}

Dataset parse_csv(const std::string& text, const std::vector<ColumnSpec>& expected_schema,
                  const CsvOptions& options) {
    auto records = split_records(text, options.delimiter);
    if (records.empty()) {
        throw ConfigError("empty CSV input");
    }

    Dataset data;
    std::size_t first_data_line = 1;
    if (options.header) {
        for (const auto& name : records.front()) {
            data.schema.push_back({name, ColumnKind::continuous});
        }
        first_data_line = 2;
        records.erase(records.begin());
    } else if (!expected_schema.empty()) {
        data.schema = expected_schema;
    } else {
        throw ConfigError("headerless CSV requires an explicit schema");
    }

    if (!expected_schema.empty() && options.header) {
        if (expected_schema.size() != data.schema.size()) {
            throw ConfigError("schema mismatch: expected " +
                              std::to_string(expected_schema.size()) + " columns, file has " +
                              std::to_string(data.schema.size()));
        }
        for (std::size_t i = 0; i < expected_schema.size(); ++i) {
            if (expected_schema[i].name != data.schema[i].name) {
                throw ConfigError("schema mismatch at column " + std::to_string(i + 1) +
                                  ": expected '" + expected_schema[i].name + "', file has '" +
                                  data.schema[i].name + "'");
            }
        }
        data.schema = expected_schema;
    }

    const std::size_t n_cols = data.schema.size();
    data.rows.reserve(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        const std::size_t line = first_data_line + r;
        if (rec.size() != n_cols) {
            throw ConfigError("ragged row at line " + std::to_string(line) + ": " +
                              std::to_string(rec.size()) + " fields, expected " +
                              std::to_string(n_cols));
        }
        std::vector<double> row(n_cols);
        for (std::size_t c = 0; c < n_cols; ++c) {
            double v;
            if (parse_number(rec[c], v)) {
                row[c] = v;
            } else {
                auto col_it = options.encodings.find(data.schema[c].name);
                if (col_it == options.encodings.end()) {
                    throw ConfigError("unmapped category '" + rec[c] + "' in column '" +
                                      data.schema[c].name + "' at line " + std::to_string(line));
                }
                auto val_it = col_it->second.find(rec[c]);
                if (val_it == col_it->second.end()) {
                    throw ConfigError("unmapped category '" + rec[c] + "' in column '" +
                                      data.schema[c].name + "' at line " + std::to_string(line));
                }
                row[c] = val_it->second;
            }
            if (!std::isfinite(row[c])) {
                throw ConfigError("non-finite numeric in column '" + data.schema[c].name +
                                  "' at line " + std::to_string(line));
            }
        }
        data.rows.push_back(std::move(row));
    }

    // Infer binary kinds when the caller did not pin them.
    if (expected_schema.empty()) {
        for (std::size_t c = 0; c < n_cols; ++c) {
            bool binary = !data.rows.empty();
            for (const auto& row : data.rows) {
                if (row[c] != 0.0 && row[c] != 1.0) {
                    binary = false;
                    break;
                }
            }
            if (binary) data.schema[c].kind = ColumnKind::binary;
        }
    }

    data.validate();
    return data;
}

Dataset load_csv(const std::string& path, const std::vector<ColumnSpec>& expected_schema,
                 const CsvOptions& options) {
    return parse_csv(read_file(path), expected_schema, options);
}

std::string to_csv(const Dataset& data) {
    std::string out;
    for (std::size_t c = 0; c < data.schema.size(); ++c) {
        if (c) out.push_back(',');
        out += data.schema[c].name;
    }
    out.push_back('\n');
    for (const auto& row : data.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out.push_back(',');
            out += format_double(row[c]);
        }
        out.push_back('\n');
    }
    return out;
}

void save_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write file: " + path);
    }
    out << to_csv(data);
}

EncodingTable parse_encoding_table(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("encoding table: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("encoding table must be a JSON object");
    }
    EncodingTable table;
    for (auto& [column, mapping] : j.items()) {
        if (!mapping.is_object()) {
            throw ConfigError("encoding for column '" + column + "' must be an object");
        }
        for (auto& [raw, value] : mapping.items()) {
            if (!value.is_number()) {
                throw ConfigError("encoding value for '" + column + "." + raw +
                                  "' must be a number");
            }
            table[column][raw] = value.get<double>();
        }
    }
    return table;
}

EncodingTable load_encoding_table(const std::string& path) {
    return parse_encoding_table(read_file(path));
}

std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("split fraction must lie in (0,1)");
    }
    std::vector<std::size_t> order(data.n_rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "split", 0));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(order[i - 1], order[j]);
    }
    std::size_t n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(data.n_rows()) * fraction));
    Dataset train{data.schema, {}};
    Dataset eval{data.schema, {}};
    train.rows.reserve(n_train);
    eval.rows.reserve(data.n_rows() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? train : eval).rows.push_back(data.rows[order[i]]);
    }
    return {std::move(train), std::move(eval)};
}

}  // namespace causalfuzz
