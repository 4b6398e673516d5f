#include "wakesteer/rng.hpp"

#include <cmath>

namespace wakesteer {

double StreamRng::normal() {
    // Box-Muller, cosine branch only so each call costs two counter values.
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace wakesteer
