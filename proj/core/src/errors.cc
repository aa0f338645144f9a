#include "hinfsparse/errors.h"

#include <utility>

namespace hinfsparse {

InfeasibleError::InfeasibleError(const std::string& what, std::string solver_status,
                                 double achieved_margin)
    : Error(what), solver_status_(std::move(solver_status)), achieved_margin_(achieved_margin) {}

VerificationFailed::VerificationFailed(const std::string& what, double achieved_norm)
    : Error(what), achieved_norm_(achieved_norm) {}

}  // namespace hinfsparse
