#pragma once

// Internal access to embedded default data shared across modules.

#include <string>
#include <vector>

namespace tdm::detail {

// Neutral sentences used by the synthetic generator; none of them contains a
// default-lexicon phrase on token boundaries (asserted by tests).
const std::vector<std::string>& synth_filler_sentences();

}  // namespace tdm::detail
