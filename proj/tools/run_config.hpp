#pragma once

/** @file run_config.hpp
 *  @brief Settings shared by every subcommand, plus output helpers.
 */

#include "fibwild/errors.hpp"

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

namespace fibwild::cli {

enum class Format { Json, Csv };

struct RunConfig {
    int precision_bits = 113;
    int depth = 0;              ///< truncation N; 0 lets each command choose
    double sum_tol = 1e-12;     ///< weights tail tolerance
    int max_terms = 20000;      ///< weight scan length before PrecisionExhausted
    int max_iterations = 5000;  ///< bisection iteration cap
    std::uint64_t seed = 1;
    int threads = 0;
    Format format = Format::Csv;
    std::string output;         ///< empty: stdout

    void validate() const
    {
        if (precision_bits != 53 && precision_bits != 113 && precision_bits != 256)
            throw InvalidArgument("precision_bits must be one of 53, 113, 256");
        if (!(sum_tol > 0))
            throw InvalidArgument("tolerances must be positive");
        if (max_terms < 4 || max_iterations < 1)
            throw InvalidArgument("iteration limits must be positive");
        if (depth < 0)
            throw InvalidArgument("depth must be non-negative");
    }
};

/// Precision default from FIBWILD_PRECISION_BITS, else 113.
inline int default_precision_bits()
{
    const char* env = std::getenv("FIBWILD_PRECISION_BITS");
    if (!env || !*env)
        return 113;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (*end != '\0' || (v != 53 && v != 113 && v != 256))
        throw InvalidArgument(std::string("FIBWILD_PRECISION_BITS must be 53, 113 or 256, got '") + env + "'");
    return static_cast<int>(v);
}

class Output {
public:
    explicit Output(const std::string& path)
    {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_)
                throw InvalidArgument("cannot open output file " + path);
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

/// RFC 4180 quoting when the field needs it.
inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + "\"";
}

} // namespace fibwild::cli
