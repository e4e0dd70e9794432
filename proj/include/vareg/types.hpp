#pragma once

#include <string>

namespace vareg {

// A (valence, arousal) pair on the 1-9 scale (predictions may fall
// outside it; clamping happens only at serialization).
struct VA {
  double v = 0.0;
  double a = 0.0;
};

struct Prediction {
  std::string id;
  VA va;
};

}  // namespace vareg
