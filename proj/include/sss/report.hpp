#pragma once

#include <sss/dataset.hpp>
#include <sss/errors.hpp>
#include <sss/graph.hpp>
#include <sss/rng.hpp>
#include <sss/stability.hpp>
#include <sss/synthbench.hpp>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sss {

namespace detail {

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out += c;
        }
    }
    out += '"';
    return out;
}

inline std::string dot_id(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
        }
        out += c;
    }
    out += '"';
    return out;
}

} // namespace detail

/// complexity,var_a,var_b,probability,n_models; one row per level and pair.
inline std::string stability_csv(const StabilityGraph& g, const std::vector<std::string>& names) {
    std::string out = "complexity,var_a,var_b,probability,n_models\n";
    for (std::size_t c = 0; c < g.levels(); ++c) {
        for (std::size_t k = 0; k < g.pairs().size(); ++k) {
            const auto [a, b] = g.pairs()[k];
            out += fmt::format("{},{},{},{},{}\n", c, detail::csv_field(names.at(a)), detail::csv_field(names.at(b)),
                               g.prob(c, k), g.counts()[c]);
        }
    }
    return out;
}

/// complexity,mean_bic,n_models; mean_bic is empty where no model contributed.
inline std::string bic_csv(const BicCurve& curve) {
    std::string out = "complexity,mean_bic,n_models\n";
    for (std::size_t c = 0; c < curve.mean_bic.size(); ++c) {
        if (curve.n_models[c] > 0) {
            out += fmt::format("{},{},{}\n", c, curve.mean_bic[c], curve.n_models[c]);
        } else {
            out += fmt::format("{},,0\n", c);
        }
    }
    return out;
}

inline std::string model_dot(const InferredModel& model) {
    std::string out = "digraph model {\n";
    for (const auto& name : model.nodes) {
        out += fmt::format("  {};\n", detail::dot_id(name));
    }
    for (const auto& e : model.edges) {
        out += fmt::format("  {} -> {} [label=\"{:.2f}\"{}];\n", detail::dot_id(model.nodes.at(e.from)),
                           detail::dot_id(model.nodes.at(e.to)), e.reliability, e.directed ? "" : ", dir=none");
    }
    out += "}\n";
    return out;
}

inline std::string cpdag_dot(const Cpdag& c, const std::vector<std::string>& names) {
    std::string out = "digraph cpdag {\n";
    for (const auto& name : names) {
        out += fmt::format("  {};\n", detail::dot_id(name));
    }
    for (const auto& e : c.edges()) {
        out += fmt::format("  {} -> {}{};\n", detail::dot_id(names.at(e.from)), detail::dot_id(names.at(e.to)),
                           e.label == EdgeLabel::reversible ? " [dir=none]" : "");
    }
    out += "}\n";
    return out;
}

inline nlohmann::json relations_json(const std::vector<RelevantRelation>& rels, const std::vector<std::string>& names) {
    auto out = nlohmann::json::array();
    for (const auto& r : rels) {
        out.push_back({{"var_a", names.at(r.a)}, {"var_b", names.at(r.b)}, {"score", r.score}});
    }
    return out;
}

/// Parsed arc list: node names in order of first appearance plus arcs by index.
struct ArcList {
    std::vector<std::string> names;
    std::vector<std::pair<int, int>> arcs;
};

/// Accepts a bare edge list (`A -> B` per line) or a simple DOT digraph body. Attribute lists,
/// `digraph`/`graph` headers and braces are skipped; `#` and `//` start comments.
inline ArcList parse_arc_list(std::string_view text) {
    ArcList out;
    auto intern = [&](const std::string& name) {
        for (std::size_t i = 0; i < out.names.size(); ++i) {
            if (out.names[i] == name) {
                return static_cast<int>(i);
            }
        }
        out.names.push_back(name);
        return static_cast<int>(out.names.size() - 1);
    };
    std::size_t pos = 0;
    std::size_t line = 1;
    std::vector<std::string> statement;
    auto flush = [&] {
        if (statement.empty()) {
            return;
        }
        if (statement.size() == 1) {
            intern(statement[0]);
        } else if (statement.size() == 3 && statement[1] == "->") {
            const int a = intern(statement[0]);
            const int b = intern(statement[2]);
            if (a == b) {
                throw InputError("line " + std::to_string(line) + ": self loop on '" + statement[0] + "'");
            }
            out.arcs.emplace_back(a, b);
        } else {
            throw InputError("line " + std::to_string(line) + ": expected '<A> -> <B>' or a node name");
        }
        statement.clear();
    };
    while (pos < text.size()) {
        const char c = text[pos];
        if (c == '\n') {
            flush();
            ++line;
            ++pos;
        } else if (c == ';' || c == '{' || c == '}') {
            flush();
            ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else if (c == '#' || text.substr(pos, 2) == "//") {
            while (pos < text.size() && text[pos] != '\n') {
                ++pos;
            }
        } else if (c == '[') {
            const auto close = text.find(']', pos);
            if (close == std::string_view::npos) {
                throw InputError("line " + std::to_string(line) + ": unterminated attribute list");
            }
            pos = close + 1;
        } else if (text.substr(pos, 2) == "->") {
            statement.emplace_back("->");
            pos += 2;
        } else if (c == '"') {
            std::string name;
            ++pos;
            while (pos < text.size() && text[pos] != '"') {
                if (text[pos] == '\\' && pos + 1 < text.size()) {
                    ++pos;
                }
                name += text[pos++];
            }
            if (pos >= text.size()) {
                throw InputError("line " + std::to_string(line) + ": unterminated quoted name");
            }
            ++pos;
            statement.push_back(std::move(name));
        } else {
            std::string word;
            while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_' ||
                                         text[pos] == '.')) {
                word += text[pos++];
            }
            if (word.empty()) {
                throw InputError("line " + std::to_string(line) + ": unexpected character '" + std::string(1, c) + "'");
            }
            if (statement.empty() && (word == "digraph" || word == "strict")) {
                // Header; a following graph name is dropped with it.
                while (pos < text.size() && text[pos] != '{') {
                    ++pos;
                }
                continue;
            }
            statement.push_back(std::move(word));
        }
    }
    flush();
    return out;
}

/// Ground truth JSON: `names`, `arcs` (pairs of names), optional `coefficients` (one per arc),
/// `noise_variances` and `constraints` (pairs [a, b] meaning a -/-> b). Missing coefficients
/// are drawn from `rng`.
inline GroundTruth parse_ground_truth(std::string_view text, Rng& rng) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("ground truth is not valid JSON: ") + e.what());
    }
    try {
        const auto names = j.at("names").get<std::vector<std::string>>();
        const int n = static_cast<int>(names.size());
        if (n < 2) {
            throw InputError("ground truth needs at least two variables");
        }
        auto index_of = [&](const std::string& name) {
            for (int i = 0; i < n; ++i) {
                if (names[static_cast<std::size_t>(i)] == name) {
                    return i;
                }
            }
            throw InputError("ground truth references unknown variable '" + name + "'");
        };
        std::vector<std::pair<int, int>> arcs;
        for (const auto& arc : j.at("arcs")) {
            const auto pair = arc.get<std::vector<std::string>>();
            if (pair.size() != 2) {
                throw InputError("each arc must be a pair of names");
            }
            arcs.emplace_back(index_of(pair[0]), index_of(pair[1]));
        }
        ConstraintSet constraints;
        if (j.contains("constraints")) {
            for (const auto& c : j.at("constraints")) {
                const auto pair = c.get<std::vector<std::string>>();
                if (pair.size() != 2) {
                    throw InputError("each constraint must be a pair of names");
                }
                constraints.forbid(index_of(pair[0]), index_of(pair[1]));
            }
        }
        Dag dag = Dag::from_arcs(n, arcs, constraints);
        GroundTruth gt = make_ground_truth(std::move(dag), names, std::move(constraints), rng);
        if (j.contains("coefficients")) {
            const auto coef = j.at("coefficients").get<std::vector<double>>();
            if (coef.size() != arcs.size()) {
                throw InputError("coefficients must list one weight per arc");
            }
            for (std::size_t k = 0; k < arcs.size(); ++k) {
                gt.coefficients(arcs[k].first, arcs[k].second) = coef[k];
            }
        }
        if (j.contains("noise_variances")) {
            const auto var = j.at("noise_variances").get<std::vector<double>>();
            if (var.size() != names.size()) {
                throw InputError("noise_variances must list one value per variable");
            }
            gt.noise_variances = Eigen::Map<const Eigen::VectorXd>(var.data(), n);
        }
        gt.validate();
        return gt;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed ground truth: ") + e.what());
    } catch (const ContractError& e) {
        throw InputError(std::string("invalid ground truth: ") + e.what());
    } catch (const StructuralError& e) {
        throw InputError(std::string("invalid ground truth: ") + e.what());
    } catch (const ConfigError& e) {
        throw InputError(std::string("invalid ground truth: ") + e.what());
    }
}

inline nlohmann::json roc_json(const std::optional<RocCurve>& c) {
    if (!c) {
        return nullptr;
    }
    auto points = nlohmann::json::array();
    for (const auto& p : c->points) {
        points.push_back({p.fpr, p.tpr});
    }
    return {{"auc", c->auc}, {"points", points}};
}

inline nlohmann::json auc_json(const std::optional<RocCurve>& c) {
    return c ? nlohmann::json(c->auc) : nlohmann::json(nullptr);
}

/// AUC fields are null where the rate is undefined for the truth.
inline nlohmann::json benchmark_json(const BenchmarkReport& r) {
    nlohmann::json out;
    out["averaging"] = {{"pi_bic", r.averaging.pi_bic},
                        {"auc_edge", auc_json(r.averaging.edge)},
                        {"auc_path", auc_json(r.averaging.path)},
                        {"roc_edge", roc_json(r.averaging.edge)},
                        {"roc_path", roc_json(r.averaging.path)}};
    auto reps = nlohmann::json::array();
    for (std::size_t k = 0; k < r.individual.size(); ++k) {
        const auto& s = r.individual[k];
        reps.push_back({{"rep", k},
                        {"pi_bic", s.pi_bic},
                        {"auc_edge", auc_json(s.edge)},
                        {"auc_path", auc_json(s.path)},
                        {"failed_subsets", r.failed_subsets.at(k)},
                        {"roc_edge", roc_json(s.edge)},
                        {"roc_path", roc_json(s.path)}});
    }
    out["individual"] = reps;
    return out;
}

/// scheme,rep,fpr,tpr; rep is empty for the averaging scheme.
inline std::string roc_csv(const BenchmarkReport& r, bool path) {
    std::string out = "scheme,rep,fpr,tpr\n";
    auto emit = [&](const SchemeResult& s, const std::string& scheme, const std::string& rep) {
        const auto& c = path ? s.path : s.edge;
        if (!c) {
            return;
        }
        for (const auto& p : c->points) {
            out += fmt::format("{},{},{},{}\n", scheme, rep, p.fpr, p.tpr);
        }
    };
    emit(r.averaging, "averaging", "");
    for (std::size_t k = 0; k < r.individual.size(); ++k) {
        emit(r.individual[k], "individual", std::to_string(k));
    }
    return out;
}

} // namespace sss
