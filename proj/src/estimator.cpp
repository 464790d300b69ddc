#include "fsc/estimator.hpp"

namespace fsc {

CounterfactualEstimate predict(const Panel& panel, const WeightVector& weights,
                               const SpaceAdapter& adapter, int period) {
    panel.validate();
    if (period < panel.T0 || period >= panel.n_periods()) {
        throw DomainError("predict: period must lie in the post-treatment window");
    }
    const int n = panel.n_units() - 1;
    if (weights.weights.size() != n) {
        throw DimensionError("predict: weight length does not match panel");
    }
    if (!panel.grid->same_as(*adapter.grid())) {
        throw DimensionError("predict: adapter grid does not match panel grid");
    }
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(panel.grid->size());
    for (int i = 0; i < n; ++i) raw += weights.weights[i] * panel.outcomes[i + 1][period];

    CounterfactualEstimate est;
    est.period = period;
    est.raw = HilbertElement(panel.grid, std::move(raw));
    est.projected = project(adapter, est.raw);
    est.object = inverse(adapter, est.projected);
    est.weights_used = weights;
    return est;
}

EffectSeries effects(const Panel& panel,
                     const std::vector<CounterfactualEstimate>& estimates,
                     const SpaceAdapter& adapter) {
    EffectSeries series;
    series.entries.reserve(estimates.size());
    for (const auto& est : estimates) {
        EffectEntry e;
        e.period = est.period;
        HilbertElement observed = panel.element(0, est.period);
        e.difference = HilbertElement(panel.grid, observed.values - est.projected.values);
        e.magnitude = norm(e.difference);
        e.counterfactual = est.object;
        e.observed = inverse(adapter, project(adapter, observed));
        series.entries.push_back(std::move(e));
    }
    return series;
}

MetricObject effect_geodesic_point(const SpaceAdapter& adapter, const EffectEntry& entry,
                                   double s) {
    return geodesic(adapter, entry.counterfactual, entry.observed, s);
}

} // namespace fsc
