#pragma once

// JSON model descriptors, the LD-QBD block file format, certificate
// serialization, and CSV output helpers.
//
// Model descriptors:
//   {"model":"mm1","lambda":...,"mu":...}
//   {"model":"retrial","s":...,"lambda":...,"mu":...,"eta":...}
//   {"model":"ldqbd_file","path":...,"complete_diagonal":false}
// Block files are JSON arrays of
//   {"k":...,"Aminus":[[...]],"Azero":[[...]],"Aplus":[[...]]}
// with dense row-major block arrays; Aminus may be omitted at k = 0.

#include <lctrunc/certificates.hpp>
#include <lctrunc/models.hpp>
#include <lctrunc/stationary.hpp>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

namespace lctrunc {

using nlohmann::json;

inline std::string format_sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.5e", x);
    return buf;
}

struct LoadedModel {
    std::string kind;
    BlockGenerator generator;
    std::optional<RetrialParams> retrial;
    double mm1_lambda = 0.0;
    double mm1_mu = 0.0;
};

namespace detail {

inline Matrix matrix_from_json(const json& rows) {
    if (!rows.is_array()) throw StructureError("block file: matrix must be an array of rows");
    const int nr = static_cast<int>(rows.size());
    if (nr == 0) return Matrix(0, 0);
    const int nc = static_cast<int>(rows[0].size());
    Matrix m(nr, nc);
    for (int i = 0; i < nr; ++i) {
        if (static_cast<int>(rows[i].size()) != nc)
            throw StructureError("block file: ragged matrix rows");
        for (int j = 0; j < nc; ++j) m(i, j) = rows[i][j].get<double>();
    }
    return m;
}

}  // namespace detail

inline std::vector<LdqbdLevel> load_block_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StructureError("cannot open block file: " + path);
    json doc = json::parse(in);
    if (!doc.is_array() || doc.empty())
        throw StructureError("block file must be a nonempty JSON array");
    std::vector<LdqbdLevel> levels(doc.size());
    std::vector<bool> seen(doc.size(), false);
    for (const json& entry : doc) {
        const int k = entry.at("k").get<int>();
        if (k < 0 || k >= static_cast<int>(levels.size()) || seen[k])
            throw StructureError("block file: levels must be 0..m-1, each once");
        seen[k] = true;
        LdqbdLevel lv;
        lv.a_zero = detail::matrix_from_json(entry.at("Azero"));
        lv.a_plus = detail::matrix_from_json(entry.at("Aplus"));
        if (entry.contains("Aminus")) lv.a_minus = detail::matrix_from_json(entry["Aminus"]);
        levels[k] = std::move(lv);
    }
    return levels;
}

inline LoadedModel load_model_json(const json& doc) {
    const std::string kind = doc.at("model").get<std::string>();
    if (kind == "mm1") {
        const double lambda = doc.at("lambda").get<double>();
        const double mu = doc.at("mu").get<double>();
        return {kind, mm1_generator(lambda, mu), std::nullopt, lambda, mu};
    }
    if (kind == "retrial") {
        RetrialParams p;
        p.s = doc.at("s").get<int>();
        p.lambda = doc.at("lambda").get<double>();
        p.mu = doc.at("mu").get<double>();
        p.eta = doc.at("eta").get<double>();
        return {kind, retrial_generator(p), p, 0.0, 0.0};
    }
    if (kind == "ldqbd_file") {
        auto levels = load_block_file(doc.at("path").get<std::string>());
        const bool complete = doc.value("complete_diagonal", false);
        return {kind, ldqbd_generator(std::move(levels), complete), std::nullopt, 0.0, 0.0};
    }
    throw StructureError("unknown model kind: " + kind);
}

inline LoadedModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StructureError("cannot open model file: " + path);
    return load_model_json(json::parse(in));
}

inline void stationary_to_csv(const TruncatedStationary& pi, std::ostream& out) {
    out << "level,phase,probability\n";
    for (int k = 0; k <= pi.n; ++k) {
        const Vector lv = pi.level(k);
        for (int i = 0; i < lv.size(); ++i)
            out << k << ',' << i << ',' << format_sci(lv(i)) << '\n';
    }
}

/// Certificates serialize with closed-form tags, not arrays.
inline json certificate_to_json(const RetrialParams& p, const RetrialTuning& t,
                                const ExponentialCertificate& cert) {
    return json{{"kind", "retrial_exp"}, {"s", p.s},          {"lambda", p.lambda},
                {"mu", p.mu},            {"eta", p.eta},      {"alpha", t.alpha},
                {"gamma", t.gamma},      {"b", cert.b},       {"c", cert.c},
                {"K", cert.K}};
}

inline json certificate_to_json(const RetrialParams& p, const RetrialTuning& t,
                                const SharpCertificate& cert) {
    return json{{"kind", "retrial_sharp"},
                {"s", p.s},
                {"lambda", p.lambda},
                {"mu", p.mu},
                {"eta", p.eta},
                {"alpha", t.alpha},
                {"gamma", t.gamma},
                {"alpha_sharp", cert.alpha_sharp},
                {"gamma_sharp", cert.gamma_sharp},
                {"b_sharp", cert.b_sharp},
                {"c_sharp", cert.c_sharp},
                {"K_sharp", cert.K_sharp},
                {"r0_sharp", cert.r0_sharp},
                {"r1_sharp", cert.r1_sharp}};
}

inline ExponentialCertificate certificate_from_json(const json& doc, RetrialParams* params_out,
                                                    RetrialTuning* tuning_out) {
    if (doc.at("kind").get<std::string>() != "retrial_exp")
        throw StructureError("certificate_from_json: expected kind retrial_exp");
    RetrialParams p;
    p.s = doc.at("s").get<int>();
    p.lambda = doc.at("lambda").get<double>();
    p.mu = doc.at("mu").get<double>();
    p.eta = doc.at("eta").get<double>();
    RetrialTuning t;
    t.alpha = doc.at("alpha").get<double>();
    t.gamma = doc.at("gamma").get<double>();
    if (params_out) *params_out = p;
    if (tuning_out) *tuning_out = t;
    return retrial_certificate(p, t);
}

}  // namespace lctrunc
