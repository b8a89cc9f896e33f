#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace causalfuzz {

enum class ColumnKind { continuous, binary };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
};

// Rectangular numeric table. Validated on construction: finite values only,
// binary columns restricted to {0,1}.
struct Dataset {
    std::vector<ColumnSpec> schema;
    std::vector<std::vector<double>> rows;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return schema.size(); }

    bool has_column(const std::string& name) const;
    // Throws ConfigError when the column is absent.
    std::size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;

    // Re-checks all invariants; throws ConfigError on violation.
    void validate() const;
};

// Per-column mapping of raw categorical strings to numeric codes.
// No silent auto-encoding: a non-numeric cell without a mapping is an error.
using EncodingTable = std::map<std::string, std::map<std::string, double>>;

struct CsvOptions {
    bool header = true;
    char delimiter = ',';
    EncodingTable encodings;
};

// Expected schema is optional; when absent, column names come from the header
// and kinds are inferred (binary iff every value is 0 or 1).
Dataset load_csv(const std::string& path,
                 const std::vector<ColumnSpec>& expected_schema = {},
                 const CsvOptions& options = {});

Dataset parse_csv(const std::string& text,
                  const std::vector<ColumnSpec>& expected_schema = {},
                  const CsvOptions& options = {});

// Shortest round-trip decimal formatting, so load(save(d)) is an identity.
void save_csv(const Dataset& data, const std::string& path);
std::string to_csv(const Dataset& data);

// Parses the {column: {raw value -> number}} JSON table.
EncodingTable parse_encoding_table(const std::string& json_text);
EncodingTable load_encoding_table(const std::string& path);

// Seeded shuffle split into (train, eval) of sizes floor(n*fraction) / rest.
std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed);

}  // namespace causalfuzz
