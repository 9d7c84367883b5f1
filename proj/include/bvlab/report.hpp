#pragma once

/*
 * CSV reports. Every file starts with a header row naming the columns and a
 * comment row recording the configuration hash and the seed; numbers are
 * printed with 17 significant digits so that identical runs give identical
 * bytes.
 */

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace bvlab {

/// Shortest form that round-trips exactly ("%.17g"); "nan", "inf", "-inf".
std::string format_double(double v);

/// FNV-1a over the canonical (key-sorted) JSON serialization.
std::uint64_t config_hash(const nlohmann::json& config);

std::string hex(std::uint64_t v);

class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::vector<std::string> columns, std::uint64_t config_hash, std::uint64_t seed);

    /// Throws InputError when the number of fields does not match the header.
    void row(const std::vector<std::string>& fields);

    std::size_t rows() const { return rows_; }

private:
    std::ostream& out_;
    std::size_t columns_;
    std::size_t rows_ = 0;
};

} // namespace bvlab
