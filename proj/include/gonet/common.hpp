#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gonet {

// Error taxonomy. The CLI maps these onto exit codes: input/validation
// failures exit 2, numerical failures exit 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct LookupError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};

// Dense row-major matrices for integer/byte payloads (encoded sequences,
// padding masks, binary label vectors).
struct IntMatrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::int32_t> data;

    std::int32_t at(std::int64_t r, std::int64_t c) const { return data[r * cols + c]; }
    std::int32_t& at(std::int64_t r, std::int64_t c) { return data[r * cols + c]; }
};

struct ByteMatrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::uint8_t> data;

    std::uint8_t at(std::int64_t r, std::int64_t c) const { return data[r * cols + c]; }
    std::uint8_t& at(std::int64_t r, std::int64_t c) { return data[r * cols + c]; }
};

struct FloatMatrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<float> data;

    float at(std::int64_t r, std::int64_t c) const { return data[r * cols + c]; }
    float& at(std::int64_t r, std::int64_t c) { return data[r * cols + c]; }
};

// Ordered counters so that manifests and reports serialize identically
// across runs.
using Counters = std::map<std::string, std::uint64_t>;

// A named tensor payload as stored in the container file format.
struct NamedArray {
    std::string name;
    std::vector<std::int64_t> shape;
    std::vector<float> values;
};

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);
std::string to_hex(std::uint64_t v);

// String helpers shared by the parsers.
std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);
std::string upper(const std::string& s);

// Formats a floating point value with enough digits to round-trip.
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace gonet
