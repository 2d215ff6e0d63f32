#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace nf {

struct GradcheckRow {
    std::string op;
    double max_rel_err = 0.0;
    std::size_t checked = 0;
    double tolerance = 1e-4;

    bool pass() const { return checked > 0 && max_rel_err <= tolerance; }
};

/// Central-difference verification of every differentiable primitive, the
/// composed pixel pipeline, both losses, and the total batch loss on an 8^3
/// scene at lambda_n in {0, 0.5, 1}. Where stop-gradient is active the
/// reference is the loss with the detached quantities frozen at their
/// unperturbed values.
std::vector<GradcheckRow> run_gradcheck(std::uint64_t seed = 7, double tolerance = 1e-4);

/// Header `op,max_rel_err,checked,tolerance,pass`.
void write_gradcheck_csv(std::ostream& out, const std::vector<GradcheckRow>& rows);

}  // namespace nf
