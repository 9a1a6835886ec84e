#pragma once

#include <stdexcept>
#include <string>

namespace bucketops {

// All library errors carry a stable machine-readable name so the CLI can
// report it verbatim (exit code 2 paths) without string-matching what().
class Error : public std::runtime_error {
public:
    Error(const char* name, const std::string& what)
        : std::runtime_error(what), name_(name) {}

    const char* name() const noexcept { return name_; }

private:
    const char* name_;
};

struct MalformedRows : Error {
    explicit MalformedRows(const std::string& what) : Error("MalformedRows", what) {}
};

struct DegenerateTransition : Error {
    explicit DegenerateTransition(const std::string& what) : Error("DegenerateTransition", what) {}
};

struct SymmetricSource : Error {
    explicit SymmetricSource(const std::string& what) : Error("SymmetricSource", what) {}
};

struct NonPositiveProbability : Error {
    explicit NonPositiveProbability(const std::string& what) : Error("NonPositiveProbability", what) {}
};

struct InvalidP : Error {
    explicit InvalidP(const std::string& what) : Error("InvalidP", what) {}
};

struct DepthCapExceeded : Error {
    explicit DepthCapExceeded(const std::string& what) : Error("DepthCapExceeded", what) {}
};

struct NegativeVariance : Error {
    explicit NegativeVariance(const std::string& what) : Error("NegativeVariance", what) {}
};

struct ZeroScale : Error {
    explicit ZeroScale(const std::string& what) : Error("ZeroScale", what) {}
};

}  // namespace bucketops
