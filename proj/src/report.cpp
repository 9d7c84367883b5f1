#include "bvlab/report.hpp"

#include <cmath>
#include <cstdio>

#include "bvlab/errors.hpp"
#include "bvlab/random.hpp"

namespace bvlab {

namespace {

std::string quote(const std::string& field)
{
    if (field.find_first_of(",\"\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t config_hash(const nlohmann::json& config) { return fnv1a(config.dump()); }

std::string hex(std::uint64_t v)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> columns, std::uint64_t hash, std::uint64_t seed)
    : out_(out), columns_(columns.size())
{
    for (std::size_t k = 0; k < columns.size(); ++k) {
        out_ << (k ? "," : "") << quote(columns[k]);
    }
    out_ << "\n# config_hash=" << hex(hash) << ", seed=" << seed << "\n";
}

void CsvWriter::row(const std::vector<std::string>& fields)
{
    if (fields.size() != columns_) {
        throw InputError("CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                         std::to_string(columns_));
    }
    for (std::size_t k = 0; k < fields.size(); ++k) {
        out_ << (k ? "," : "") << quote(fields[k]);
    }
    out_ << "\n";
    ++rows_;
}

} // namespace bvlab
