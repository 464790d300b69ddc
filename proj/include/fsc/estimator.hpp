#pragma once

#include <vector>

#include "fsc/panel.hpp"
#include "fsc/spaces.hpp"
#include "fsc/weights.hpp"

namespace fsc {

// Counterfactual estimate for one post-treatment period: the weighted
// combination in the Hilbert space, its projection back onto the image, and
// the inverted metric-space object.
struct CounterfactualEstimate {
    int period = 0; // 0-based, T0 <= period < T
    HilbertElement raw;
    HilbertElement projected;
    MetricObject object;
    WeightVector weights_used;
};

struct EffectEntry {
    int period = 0;
    HilbertElement difference; // observed minus counterfactual, in H
    double magnitude = 0.0;    // Hilbert norm of the difference
    MetricObject counterfactual;
    MetricObject observed;
};

// Per post-treatment period effects. Geodesic effects are kept as endpoint
// pairs; sample points on demand with effect_geodesic_point.
struct EffectSeries {
    std::vector<EffectEntry> entries;
};

CounterfactualEstimate predict(const Panel& panel, const WeightVector& weights,
                               const SpaceAdapter& adapter, int period);

EffectSeries effects(const Panel& panel,
                     const std::vector<CounterfactualEstimate>& estimates,
                     const SpaceAdapter& adapter);

// Point at parameter s on the geodesic from the counterfactual to the
// observed outcome.
MetricObject effect_geodesic_point(const SpaceAdapter& adapter, const EffectEntry& entry,
                                   double s);

} // namespace fsc
