#pragma once

// Built-in two-mode example: the parameter enters the reflectivity of a beam
// splitter (angle 0.7*phi) and the phase shifts on both arms (0.3*phi and
// 0.1*phi). The matching non-adapted input stage is a balanced beam splitter
// followed by +-pi/4 phase shifts. Closed forms for this configuration:
//   P     = (1 + sin(l - l' - 2a)) / 2   with output phase shifts -+a,
//   gamma = (l + l')/2 + eta + pi/2.

#include <string_view>

#include "sqmet/netdsl.hpp"
#include "sqmet/unitary.hpp"

namespace sqmet::builtin {

inline constexpr std::string_view kTwoModeExampleNet =
    "# Two-mode network with the parameter spread over one beam splitter\n"
    "# and both phase shifters.\n"
    "modes 2\n"
    "bs 1 2 0.7*phi\n"
    "ps 1 0.3*phi\n"
    "ps 2 0.1*phi\n";

inline constexpr std::string_view kTwoModeInputStageNet =
    "# Non-adapted input stage: balanced beam splitter, then +-pi/4 phase shifts.\n"
    "modes 2\n"
    "bs 1 2 pi/4\n"
    "ps 1 pi/4\n"
    "ps 2 -pi/4\n";

inline netdsl::NetworkSpec two_mode_example() { return netdsl::parse(kTwoModeExampleNet); }

inline UnitaryMatrix two_mode_input_stage() {
  return netdsl::evaluate(netdsl::parse(kTwoModeInputStageNet), 0.0);
}

}  // namespace sqmet::builtin
