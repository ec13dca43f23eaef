#pragma once

// Effect and coefficient tables as CSV, JSON and aligned text.

#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "pathlogit/fitting.hpp"
#include "pathlogit/inference.hpp"

namespace pathlogit {

void write_effects_csv(std::ostream& out, const std::vector<EffectEstimate>& rows);
nlohmann::json effects_to_json(const std::vector<EffectEstimate>& rows);

/// One block per (contrast, covariate setting), columns Est, SE, CI, p-value.
void write_effects_text(std::ostream& out, const std::vector<EffectEstimate>& rows);

/// Coefficient table: equation, term, estimate, SE, CI, p-value.
void write_coefficients_text(std::ostream& out, const FittedSystem& fitted);
void write_coefficients_csv(std::ostream& out, const FittedSystem& fitted);

}  // namespace pathlogit
