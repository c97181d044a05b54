#include "morpinet/types.hpp"

#include <cmath>

#include "morpinet/errors.hpp"

namespace morpinet {

bool ImuSample::finite() const {
    return std::isfinite(t) && f_b.allFinite() && w_b.allFinite();
}

void validate_stream(const ImuStream& samples) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!samples[i].finite()) {
            throw NumericError("non-finite IMU sample at index " + std::to_string(i));
        }
        if (i > 0 && samples[i].t <= samples[i - 1].t) {
            throw DataError("IMU timestamps not strictly increasing at index " +
                            std::to_string(i));
        }
    }
}

void Trajectory2D::validate() const {
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].t <= points[i - 1].t) {
            throw DataError("trajectory timestamps not strictly increasing at index " +
                            std::to_string(i));
        }
    }
}

}  // namespace morpinet
