#include "fsc/panel_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace fsc {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, int line_no, const char* what) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("line " + std::to_string(line_no) + ": bad " + what +
                              " value '" + s + "'");
    }
}

int parse_int(const std::string& s, int line_no, const char* what) {
    try {
        size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("line " + std::to_string(line_no) + ": bad " + what +
                              " value '" + s + "'");
    }
}

int raw_dim(const SpaceSpec& spec) {
    switch (spec.kind) {
        case SpaceKind::l2:
        case SpaceKind::wasserstein:
            return spec.grid_n;
        case SpaceKind::spd_frobenius:
        case SpaceKind::spd_power:
        case SpaceKind::spd_log_euclidean:
        case SpaceKind::laplacian:
            return spec.matrix_dim * spec.matrix_dim;
        case SpaceKind::composition:
            return spec.matrix_dim;
    }
    throw ValidationError("unknown space kind");
}

MetricObject raw_to_object(const SpaceSpec& spec, const Eigen::VectorXd& raw) {
    switch (spec.kind) {
        case SpaceKind::l2:
            return FunctionObj{raw};
        case SpaceKind::wasserstein:
            return DistributionObj{raw};
        case SpaceKind::spd_frobenius:
        case SpaceKind::spd_power:
        case SpaceKind::spd_log_euclidean: {
            const int m = spec.matrix_dim;
            return SpdMatrixObj{Eigen::Map<const Eigen::MatrixXd>(raw.data(), m, m)};
        }
        case SpaceKind::laplacian: {
            const int m = spec.matrix_dim;
            return GraphLaplacianObj{Eigen::Map<const Eigen::MatrixXd>(raw.data(), m, m)};
        }
        case SpaceKind::composition:
            return CompositionObj{raw};
    }
    throw ValidationError("unknown space kind");
}

Eigen::VectorXd object_to_raw(const MetricObject& obj) {
    if (auto* f = std::get_if<FunctionObj>(&obj)) return f->values;
    if (auto* d = std::get_if<DistributionObj>(&obj)) return d->quantiles;
    if (auto* s = std::get_if<SpdMatrixObj>(&obj)) {
        return Eigen::Map<const Eigen::VectorXd>(s->mat.data(), s->mat.size());
    }
    if (auto* l = std::get_if<GraphLaplacianObj>(&obj)) {
        return Eigen::Map<const Eigen::VectorXd>(l->mat.data(), l->mat.size());
    }
    return std::get<CompositionObj>(obj).parts;
}

LoadedPanel assemble(const SpaceSpec& spec, std::vector<std::string> unit_order,
                     const std::string& treated, int T0,
                     std::vector<std::vector<Eigen::VectorXd>> raw,
                     std::optional<Eigen::MatrixXd> covariates) {
    const int N = static_cast<int>(unit_order.size());
    int treated_idx = -1;
    for (int i = 0; i < N; ++i) {
        if (unit_order[i] == treated) treated_idx = i;
    }
    if (treated_idx < 0) {
        throw ValidationError("declared treated unit '" + treated + "' has no records");
    }
    if (treated_idx != 0) {
        std::swap(unit_order[0], unit_order[treated_idx]);
        std::swap(raw[0], raw[treated_idx]);
        if (covariates) covariates->row(0).swap(covariates->row(treated_idx));
    }

    SpaceAdapter adapter = spec.make_adapter();
    std::vector<std::vector<Eigen::VectorXd>> outcomes(N);
    for (int i = 0; i < N; ++i) {
        outcomes[i].reserve(raw[i].size());
        for (size_t t = 0; t < raw[i].size(); ++t) {
            try {
                outcomes[i].push_back(embed(adapter, raw_to_object(spec, raw[i][t])).values);
            } catch (const Error& e) {
                throw ValidationError("unit '" + unit_order[i] + "', period " +
                                      std::to_string(t + 1) + ": " + e.what());
            }
        }
    }
    LoadedPanel lp;
    lp.panel = make_panel(adapter.grid(), std::move(outcomes), T0, std::move(covariates));
    lp.panel.unit_ids = std::move(unit_order);
    lp.space = spec;
    lp.raw = std::move(raw);
    return lp;
}

} // namespace

SpaceKind SpaceSpec::parse_kind(const std::string& text, double* power_out,
                                double* cap_out) {
    std::string base = text;
    std::string arg;
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        base = text.substr(0, colon);
        arg = text.substr(colon + 1);
    }
    auto need_arg = [&](const char* what) {
        if (arg.empty()) {
            throw ValidationError("space '" + base + "' requires a parameter, e.g. " +
                                  what);
        }
        return std::stod(arg);
    };
    if (base == "l2") return SpaceKind::l2;
    if (base == "wasserstein") return SpaceKind::wasserstein;
    if (base == "spd-frobenius") return SpaceKind::spd_frobenius;
    if (base == "spd-power") {
        if (power_out) *power_out = need_arg("spd-power:0.5");
        return SpaceKind::spd_power;
    }
    if (base == "spd-logeuclidean") return SpaceKind::spd_log_euclidean;
    if (base == "laplacian") {
        if (cap_out) *cap_out = need_arg("laplacian:1.0");
        return SpaceKind::laplacian;
    }
    if (base == "composition") return SpaceKind::composition;
    throw ValidationError("unknown space kind '" + text + "'");
}

std::string SpaceSpec::kind_string() const {
    switch (kind) {
        case SpaceKind::l2:
            return "l2";
        case SpaceKind::wasserstein:
            return "wasserstein";
        case SpaceKind::spd_frobenius:
            return "spd-frobenius";
        case SpaceKind::spd_power:
            return "spd-power:" + format_double(power);
        case SpaceKind::spd_log_euclidean:
            return "spd-logeuclidean";
        case SpaceKind::laplacian:
            return "laplacian:" + format_double(weight_cap);
        case SpaceKind::composition:
            return "composition";
    }
    return "l2";
}

SpaceAdapter SpaceSpec::make_adapter() const {
    switch (kind) {
        case SpaceKind::l2:
            return SpaceAdapter::l2(Grid::uniform(grid_n, grid_a, grid_b));
        case SpaceKind::wasserstein:
            return SpaceAdapter::wasserstein(grid_n);
        case SpaceKind::spd_frobenius:
            return SpaceAdapter::spd_frobenius(matrix_dim);
        case SpaceKind::spd_power:
            return SpaceAdapter::spd_power(matrix_dim, power);
        case SpaceKind::spd_log_euclidean:
            return SpaceAdapter::spd_log_euclidean(matrix_dim);
        case SpaceKind::laplacian:
            return SpaceAdapter::laplacian(matrix_dim, weight_cap);
        case SpaceKind::composition:
            return SpaceAdapter::composition(matrix_dim);
    }
    throw ValidationError("unknown space kind");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

LoadedPanel load_panel(const std::string& path, const std::string& format) {
    if (format == "csv") return load_panel_csv(path);
    if (format == "json") return load_panel_json(path);
    throw ValidationError("load_panel: unknown format '" + format + "'");
}

LoadedPanel load_panel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open panel file '" + path + "'");

    SpaceSpec spec;
    bool have_space = false, have_grid = false, have_t0 = false, have_treated = false;
    int T0 = 0;
    std::string treated;
    std::map<std::string, std::vector<double>> covariate_rows;

    std::string line;
    int line_no = 0;
    bool header_done = false;

    // (unit, period) -> raw coordinate vector with per-coordinate fill marks.
    std::vector<std::string> unit_order;
    std::map<std::string, int> unit_index;
    std::map<std::pair<int, int>, std::vector<std::pair<bool, double>>> cells;
    int max_period = 0;

    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            std::string body = trim(t.substr(1));
            const auto colon = body.find(':');
            if (colon == std::string::npos) continue; // banner comment
            const std::string key = trim(body.substr(0, colon));
            const std::string value = trim(body.substr(colon + 1));
            if (key == "space") {
                spec.kind = SpaceSpec::parse_kind(value, &spec.power, &spec.weight_cap);
                have_space = true;
            } else if (key == "grid") {
                std::istringstream gs(value);
                std::string gk;
                gs >> gk;
                if (gk == "uniform") {
                    if (!(gs >> spec.grid_n >> spec.grid_a >> spec.grid_b)) {
                        throw ValidationError("line " + std::to_string(line_no) +
                                              ": grid uniform needs '<n> <a> <b>'");
                    }
                } else if (gk == "matrix" || gk == "standard") {
                    if (!(gs >> spec.matrix_dim)) {
                        throw ValidationError("line " + std::to_string(line_no) +
                                              ": grid " + gk + " needs a dimension");
                    }
                } else {
                    throw ValidationError("line " + std::to_string(line_no) +
                                          ": unknown grid kind '" + gk + "'");
                }
                have_grid = true;
            } else if (key == "T0") {
                T0 = parse_int(value, line_no, "T0");
                have_t0 = true;
            } else if (key == "treated") {
                treated = value;
                have_treated = true;
            } else if (key == "covariate") {
                std::istringstream cs(value);
                std::string uid;
                cs >> uid;
                std::vector<double> zs;
                double z;
                while (cs >> z) zs.push_back(z);
                if (uid.empty() || zs.empty()) {
                    throw ValidationError("line " + std::to_string(line_no) +
                                          ": covariate line needs '<unit> <z1> ...'");
                }
                covariate_rows[uid] = zs;
            }
            continue;
        }
        if (!header_done) {
            if (t != "unit_id,period,coord_index,value") {
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": expected column header "
                                      "'unit_id,period,coord_index,value'");
            }
            if (!have_space || !have_grid || !have_t0 || !have_treated) {
                throw ValidationError("panel header incomplete: need space, grid, T0 "
                                      "and treated declarations before data");
            }
            header_done = true;
            continue;
        }
        const auto fields = split(t, ',');
        if (fields.size() != 4) {
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": expected 4 comma-separated fields");
        }
        const std::string uid = trim(fields[0]);
        const int period = parse_int(trim(fields[1]), line_no, "period");
        const int coord = parse_int(trim(fields[2]), line_no, "coord_index");
        const double value = parse_double(trim(fields[3]), line_no, "outcome");
        const int D = raw_dim(spec);
        if (period < 1) {
            throw ValidationError("line " + std::to_string(line_no) + ": period must be >= 1");
        }
        if (coord < 1 || coord > D) {
            throw ValidationError("line " + std::to_string(line_no) + ": coord_index " +
                                  std::to_string(coord) + " outside 1.." + std::to_string(D));
        }
        if (!unit_index.count(uid)) {
            unit_index[uid] = static_cast<int>(unit_order.size());
            unit_order.push_back(uid);
        }
        auto& cell = cells[{unit_index[uid], period}];
        if (cell.empty()) cell.assign(D, {false, 0.0});
        if (cell[coord - 1].first) {
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate entry for unit '" +
                                  uid + "', period " + std::to_string(period) + ", coord " +
                                  std::to_string(coord));
        }
        cell[coord - 1] = {true, value};
        max_period = std::max(max_period, period);
    }
    if (!header_done) throw ValidationError("panel file '" + path + "' has no data section");
    if (unit_order.size() < 2) throw ValidationError("panel needs at least 2 units");
    if (max_period < 2) throw ValidationError("panel needs at least 2 periods");
    if (!(T0 >= 1 && T0 < max_period)) {
        throw ValidationError("T0 = " + std::to_string(T0) + " incompatible with T = " +
                              std::to_string(max_period));
    }

    const int N = static_cast<int>(unit_order.size());
    const int D = raw_dim(spec);
    std::vector<std::vector<Eigen::VectorXd>> raw(N);
    for (int i = 0; i < N; ++i) {
        raw[i].resize(max_period);
        for (int t = 1; t <= max_period; ++t) {
            auto it = cells.find({i, t});
            if (it == cells.end()) {
                throw ValidationError("unit '" + unit_order[i] + "' is missing period " +
                                      std::to_string(t));
            }
            Eigen::VectorXd v(D);
            for (int c = 0; c < D; ++c) {
                if (!it->second[c].first) {
                    throw ValidationError("unit '" + unit_order[i] + "', period " +
                                          std::to_string(t) + ": missing coord_index " +
                                          std::to_string(c + 1));
                }
                v[c] = it->second[c].second;
            }
            raw[i][t - 1] = std::move(v);
        }
    }

    std::optional<Eigen::MatrixXd> covariates;
    if (!covariate_rows.empty()) {
        const int p = static_cast<int>(covariate_rows.begin()->second.size());
        Eigen::MatrixXd Z(N, p);
        for (int i = 0; i < N; ++i) {
            auto it = covariate_rows.find(unit_order[i]);
            if (it == covariate_rows.end()) {
                throw ValidationError("unit '" + unit_order[i] + "' has no covariate line");
            }
            if (static_cast<int>(it->second.size()) != p) {
                throw ValidationError("unit '" + unit_order[i] +
                                      "': covariate length differs from other units");
            }
            for (int c = 0; c < p; ++c) Z(i, c) = it->second[c];
        }
        covariates = std::move(Z);
    }

    return assemble(spec, std::move(unit_order), treated, T0, std::move(raw),
                    std::move(covariates));
}

LoadedPanel load_panel_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open panel file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("panel file '" + path + "': " + e.what());
    }
    try {
        SpaceSpec spec;
        const auto& js = j.at("space");
        spec.kind = SpaceSpec::parse_kind(js.at("kind").get<std::string>(), &spec.power,
                                          &spec.weight_cap);
        if (js.contains("matrix_dim")) spec.matrix_dim = js.at("matrix_dim").get<int>();
        if (js.contains("grid_n")) spec.grid_n = js.at("grid_n").get<int>();
        if (js.contains("grid_a")) spec.grid_a = js.at("grid_a").get<double>();
        if (js.contains("grid_b")) spec.grid_b = js.at("grid_b").get<double>();

        const int T0 = j.at("T0").get<int>();
        const std::string treated = j.at("treated").get<std::string>();
        std::vector<std::string> units = j.at("units").get<std::vector<std::string>>();
        const auto& outcomes = j.at("outcomes");
        if (outcomes.size() != units.size()) {
            throw ValidationError("outcomes array length differs from units");
        }
        const int D = raw_dim(spec);
        std::vector<std::vector<Eigen::VectorXd>> raw(units.size());
        for (size_t i = 0; i < units.size(); ++i) {
            for (const auto& period_vals : outcomes.at(i)) {
                Eigen::VectorXd v(D);
                if (static_cast<int>(period_vals.size()) != D) {
                    throw ValidationError("unit '" + units[i] + "', period " +
                                          std::to_string(raw[i].size() + 1) +
                                          ": expected " + std::to_string(D) + " coordinates");
                }
                for (int c = 0; c < D; ++c) v[c] = period_vals.at(c).get<double>();
                raw[i].push_back(std::move(v));
            }
            if (raw[i].size() != raw[0].size()) {
                throw ValidationError("unit '" + units[i] + "': period count differs");
            }
        }
        std::optional<Eigen::MatrixXd> covariates;
        if (j.contains("covariates") && !j.at("covariates").is_null()) {
            const auto& cz = j.at("covariates");
            if (cz.size() != units.size()) {
                throw ValidationError("covariates array length differs from units");
            }
            const int p = static_cast<int>(cz.at(0).size());
            Eigen::MatrixXd Z(units.size(), p);
            for (size_t i = 0; i < units.size(); ++i) {
                for (int c = 0; c < p; ++c) Z(static_cast<int>(i), c) = cz.at(i).at(c).get<double>();
            }
            covariates = std::move(Z);
        }
        return assemble(spec, std::move(units), treated, T0, std::move(raw),
                        std::move(covariates));
    } catch (const json::exception& e) {
        throw ValidationError("panel file '" + path + "': " + e.what());
    }
}

void save_panel_csv(const LoadedPanel& lp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write panel file '" + path + "'");
    out << "# fsc-panel v1\n";
    out << "# space: " << lp.space.kind_string() << "\n";
    switch (lp.space.kind) {
        case SpaceKind::l2:
        case SpaceKind::wasserstein:
            out << "# grid: uniform " << lp.space.grid_n << " " << format_double(lp.space.grid_a)
                << " " << format_double(lp.space.grid_b) << "\n";
            break;
        case SpaceKind::composition:
            out << "# grid: standard " << lp.space.matrix_dim << "\n";
            break;
        default:
            out << "# grid: matrix " << lp.space.matrix_dim << "\n";
            break;
    }
    out << "# T0: " << lp.panel.T0 << "\n";
    out << "# treated: " << lp.panel.unit_ids[0] << "\n";
    if (lp.panel.covariates) {
        for (int i = 0; i < lp.panel.n_units(); ++i) {
            out << "# covariate: " << lp.panel.unit_ids[i];
            for (int c = 0; c < lp.panel.covariates->cols(); ++c) {
                out << " " << format_double((*lp.panel.covariates)(i, c));
            }
            out << "\n";
        }
    }
    out << "unit_id,period,coord_index,value\n";
    for (size_t i = 0; i < lp.raw.size(); ++i) {
        for (size_t t = 0; t < lp.raw[i].size(); ++t) {
            for (int c = 0; c < lp.raw[i][t].size(); ++c) {
                out << lp.panel.unit_ids[i] << "," << (t + 1) << "," << (c + 1) << ","
                    << format_double(lp.raw[i][t][c]) << "\n";
            }
        }
    }
}

void save_panel_json(const LoadedPanel& lp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write panel file '" + path + "'");
    out << "{\n";
    out << "  \"format\": \"fsc-panel\",\n";
    out << "  \"version\": 1,\n";
    out << "  \"space\": {\"kind\": \"" << lp.space.kind_string() << "\"";
    out << ", \"matrix_dim\": " << lp.space.matrix_dim;
    out << ", \"grid_n\": " << lp.space.grid_n;
    out << ", \"grid_a\": " << format_double(lp.space.grid_a);
    out << ", \"grid_b\": " << format_double(lp.space.grid_b) << "},\n";
    out << "  \"T0\": " << lp.panel.T0 << ",\n";
    out << "  \"treated\": \"" << lp.panel.unit_ids[0] << "\",\n";
    out << "  \"units\": [";
    for (size_t i = 0; i < lp.panel.unit_ids.size(); ++i) {
        out << (i ? ", " : "") << "\"" << lp.panel.unit_ids[i] << "\"";
    }
    out << "],\n";
    out << "  \"covariates\": ";
    if (lp.panel.covariates) {
        out << "[";
        for (int i = 0; i < lp.panel.covariates->rows(); ++i) {
            out << (i ? ", " : "") << "[";
            for (int c = 0; c < lp.panel.covariates->cols(); ++c) {
                out << (c ? ", " : "") << format_double((*lp.panel.covariates)(i, c));
            }
            out << "]";
        }
        out << "],\n";
    } else {
        out << "null,\n";
    }
    out << "  \"outcomes\": [\n";
    for (size_t i = 0; i < lp.raw.size(); ++i) {
        out << "    [";
        for (size_t t = 0; t < lp.raw[i].size(); ++t) {
            out << (t ? ", " : "") << "[";
            for (int c = 0; c < lp.raw[i][t].size(); ++c) {
                out << (c ? ", " : "") << format_double(lp.raw[i][t][c]);
            }
            out << "]";
        }
        out << "]" << (i + 1 < lp.raw.size() ? "," : "") << "\n";
    }
    out << "  ]\n";
    out << "}\n";
}

LoadedPanel wrap_panel(Panel panel, const SpaceSpec& space) {
    LoadedPanel lp;
    SpaceAdapter adapter = space.make_adapter();
    lp.raw.resize(panel.n_units());
    for (int i = 0; i < panel.n_units(); ++i) {
        for (int t = 0; t < panel.n_periods(); ++t) {
            lp.raw[i].push_back(object_to_raw(inverse(adapter, panel.element(i, t))));
        }
    }
    lp.panel = std::move(panel);
    lp.space = space;
    return lp;
}

void write_weights_json(const std::string& path, const std::vector<std::string>& unit_ids,
                        const WeightVector& weights, const std::string& estimator,
                        double lambda, bool has_lambda) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "{\n";
    out << "  \"estimator\": \"" << estimator << "\",\n";
    out << "  \"kind\": \"" << (weights.kind == WeightKind::simplex ? "simplex" : "sum_to_one")
        << "\",\n";
    out << "  \"lambda\": " << (has_lambda ? format_double(lambda) : "null") << ",\n";
    out << "  \"units\": [";
    for (int i = 0; i < weights.weights.size(); ++i) {
        out << (i ? ", " : "") << "\"" << unit_ids[i + 1] << "\"";
    }
    out << "],\n";
    out << "  \"weights\": [";
    for (int i = 0; i < weights.weights.size(); ++i) {
        out << (i ? ", " : "") << format_double(weights.weights[i]);
    }
    out << "]\n";
    out << "}\n";
}

WeightVector read_weights_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
        WeightVector wv;
        const auto vals = j.at("weights").get<std::vector<double>>();
        wv.weights = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
        wv.kind = j.at("kind").get<std::string>() == "simplex" ? WeightKind::simplex
                                                               : WeightKind::sum_to_one;
        return wv;
    } catch (const json::exception& e) {
        throw ValidationError("weights file '" + path + "': " + e.what());
    }
}

void write_csv_table(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    for (size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << "\n";
    for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << "\n";
    }
}

} // namespace fsc
