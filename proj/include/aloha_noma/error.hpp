#pragma once

#include <stdexcept>
#include <string>

namespace aloha_noma {

// Raised when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

// The optimizer found no sign change of dS/dG inside (0, 10N], or more than one.
class BracketingError : public std::runtime_error
{
  public:
    BracketingError(int degree, const std::string& what)
        : std::runtime_error(what), degree_(degree)
    {
    }

    int degree() const noexcept { return degree_; }

  private:
    int degree_;
};

// A simulation produced no offered traffic in its measurement span.
class DegenerateStatistics : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

} // namespace aloha_noma
