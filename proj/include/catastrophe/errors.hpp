#ifndef CATASTROPHE_ERRORS_HPP
#define CATASTROPHE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace catastrophe
{

// Invalid run configuration; carries the offending key.
class config_error : public std::invalid_argument
{
public:
    config_error(std::string key, const std::string& message)
        : std::invalid_argument(message), key_(std::move(key))
    {
    }

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// Optimizer did not converge, or an exact computation exceeded its truncation budget.
class numerical_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// A conditional estimate had no qualifying samples.
class statistical_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace catastrophe
#endif // CATASTROPHE_ERRORS_HPP
