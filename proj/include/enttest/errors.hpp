#pragma once

#include <stdexcept>
#include <string>

namespace enttest {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ENTTEST_ERROR(Name)                     \
  class Name : public Error {                   \
   public:                                      \
    explicit Name(const std::string& what_arg)  \
        : Error(#Name ": " + what_arg) {}       \
  }

ENTTEST_ERROR(InvalidDistribution);
ENTTEST_ERROR(DomainMismatch);
ENTTEST_ERROR(InvalidEpsilon);
ENTTEST_ERROR(ParameterOutOfRange);
ENTTEST_ERROR(BudgetExhausted);
ENTTEST_ERROR(NonConvergent);
ENTTEST_ERROR(TooLargeForExact);
ENTTEST_ERROR(Unachievable);
ENTTEST_ERROR(InvalidNet);
ENTTEST_ERROR(ConfigError);
ENTTEST_ERROR(CalibrationFailed);
ENTTEST_ERROR(FormatError);

#undef ENTTEST_ERROR

}  // namespace enttest
