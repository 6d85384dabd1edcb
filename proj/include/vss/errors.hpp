#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vss {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Violation {
    std::string bound;
    double margin;
};

class WindowViolation : public Error {
public:
    explicit WindowViolation(std::vector<Violation> v)
        : Error(describe(v)), violations(std::move(v)) {}

    std::vector<Violation> violations;

private:
    static std::string describe(const std::vector<Violation>& v)
    {
        std::string s = "exponent window violated:";
        for (const auto& x : v)
            s += " [" + x.bound + ", margin " + std::to_string(x.margin) + "]";
        return s;
    }
};

class DomainError : public Error { public: using Error::Error; };
class StepLimitError : public Error { public: using Error::Error; };
class NonFiniteState : public Error { public: using Error::Error; };
class HorizonError : public Error { public: using Error::Error; };
class SweepExhausted : public Error { public: using Error::Error; };
class ResolutionFloor : public Error { public: using Error::Error; };
class WindowTooNarrow : public Error { public: using Error::Error; };
class NotConverged : public Error {
public:
    NotConverged(const std::string& what, double osc) : Error(what), oscillation(osc) {}
    double oscillation;
};
class InsufficientTail : public Error { public: using Error::Error; };
class NoPlateau : public Error { public: using Error::Error; };
class BaseProfileTerminated : public Error { public: using Error::Error; };

} // namespace vss
