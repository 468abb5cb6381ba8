#include "regmvst/model.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "regmvst/errors.hpp"
#include "regmvst/mvst.hpp"
#include "regmvst/numeric.hpp"

namespace regmvst {

using ordered_json = nlohmann::ordered_json;

Eigen::VectorXd Theta::flatten() const {
    const Eigen::Index nq = beta.rows(), np = beta.cols();
    Eigen::VectorXd v(nq * np + np + np * (np + 1) / 2 + 3);
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < nq; ++r)
        for (Eigen::Index c = 0; c < np; ++c) v[k++] = beta(r, c);
    for (Eigen::Index j = 0; j < np; ++j) v[k++] = a_row[j];
    for (Eigen::Index r = 0; r < np; ++r)
        for (Eigen::Index c = 0; c <= r; ++c) v[k++] = psi(r, c);
    v[k++] = nu;
    v[k++] = dec.rho1;
    v[k++] = dec.rho2;
    return v;
}

std::vector<std::string> Theta::flat_names() const {
    std::vector<std::string> names;
    for (Eigen::Index r = 0; r < beta.rows(); ++r)
        for (Eigen::Index c = 0; c < beta.cols(); ++c)
            names.push_back("beta_" + std::to_string(r + 1) + "_" + std::to_string(c + 1));
    for (Eigen::Index j = 0; j < a_row.size(); ++j)
        names.push_back("a_" + std::to_string(j + 1));
    for (Eigen::Index r = 0; r < psi.rows(); ++r)
        for (Eigen::Index c = 0; c <= r; ++c)
            names.push_back("psi_" + std::to_string(r + 1) + "_" + std::to_string(c + 1));
    names.push_back("nu");
    names.push_back("rho1");
    names.push_back("rho2");
    return names;
}

void Theta::validate() const {
    if (beta.size() == 0) throw DomainError("Theta: empty beta");
    if (a_row.size() != beta.cols()) throw DomainError("Theta: a_row length must equal p");
    if (psi.rows() != beta.cols() || psi.cols() != beta.cols())
        throw DomainError("Theta: psi must be p x p");
    if (!(nu > 0.0)) throw DomainError("Theta: requires nu > 0");
    if (!dec.valid()) throw DomainError("Theta: rho1, rho2 must lie in [0, 1)");
    Eigen::LLT<Eigen::MatrixXd> llt(psi);
    if (llt.info() != Eigen::Success) throw DecompositionError("Theta: Psi is not SPD");
}

Eigen::Index Dataset::total_rows() const {
    Eigen::Index n = 0;
    for (const auto& s : subjects) n += s.rows();
    return n;
}

void Dataset::validate() const {
    if (subjects.empty()) throw DomainError("Dataset: no subjects");
    for (const auto& s : subjects) {
        if (s.y.rows() < 1) throw DomainError("Dataset: subject " + s.id + " has no rows");
        if (s.y.cols() != p || s.x.cols() != q)
            throw DomainError("Dataset: subject " + s.id + " has inconsistent column counts");
        if (s.x.rows() != s.y.rows() || s.t.size() != s.y.rows())
            throw DomainError("Dataset: subject " + s.id + " has mismatched row counts");
    }
}

namespace {

MvstParams subject_params(const Subject& s, const Theta& theta) {
    MvstParams mp;
    mp.M = s.x * theta.beta;
    mp.A = Eigen::VectorXd::Ones(s.rows()) * theta.a_row;
    mp.Sigma = dec_correlation(s.t, theta.dec);
    mp.Psi = theta.psi;
    mp.nu = theta.nu;
    return mp;
}

}  // namespace

double observed_loglik(const Dataset& data, const Theta& theta) {
    data.validate();
    theta.validate();
    ExactSum sum;
    for (const auto& s : data.subjects) {
        try {
            sum.add(mvst_logpdf(s.y, subject_params(s, theta)));
        } catch (const DecompositionError& e) {
            throw DecompositionError(std::string(e.what()) + " (subject " + s.id + ")");
        } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) + " (subject " + s.id + ")");
        }
    }
    return sum.value();
}

std::vector<Eigen::MatrixXd> standardized_residuals(const Dataset& data, const Theta& theta) {
    data.validate();
    theta.validate();
    std::vector<Eigen::MatrixXd> out;
    out.reserve(data.subjects.size());
    for (const auto& s : data.subjects) {
        const MvstParams mp = subject_params(s, theta);
        const QuadForms qf = quad_forms(s.y, mp);
        const double npd = static_cast<double>(s.rows() * data.p);
        double w;
        if (qf.rho <= 1e-12 * (qf.delta + theta.nu)) {
            // Skewless limit: W | Y is Inverse-Gamma((nu+np)/2, (delta+nu)/2).
            if (theta.nu + npd <= 2.0)
                throw EstimationError("standardized_residuals: E(W|Y) does not exist (nu + n p <= 2)");
            w = (qf.delta + theta.nu) / (theta.nu + npd - 2.0);
        } else {
            GigParams g{qf.rho, qf.delta + theta.nu, -0.5 * (theta.nu + npd)};
            w = gig_moments(g).e_w;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(mp.Sigma);
        if (llt.info() != Eigen::Success)
            throw DecompositionError("standardized_residuals: Sigma not SPD (subject " + s.id + ")");
        out.push_back(llt.matrixL().solve(s.y - mp.M - w * mp.A) / std::sqrt(w));
    }
    return out;
}

std::string residuals_long_csv(const Dataset& data, const Theta& theta) {
    const auto res = standardized_residuals(data, theta);
    std::string out = "subject_id,time,column,residual\n";
    char buf[64];
    for (std::size_t i = 0; i < res.size(); ++i) {
        const Subject& s = data.subjects[i];
        for (Eigen::Index r = 0; r < res[i].rows(); ++r) {
            for (Eigen::Index c = 0; c < res[i].cols(); ++c) {
                out += s.id;
                std::snprintf(buf, sizeof(buf), ",%.17g,%lld,%.17g\n", s.t[r],
                              static_cast<long long>(c + 1), res[i](r, c));
                out += buf;
            }
        }
    }
    return out;
}

// ---- CSV ------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, std::size_t line_no, const std::string& col) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("CSV line " + std::to_string(line_no) + ": bad numeric value '" + s +
                         "' in column " + col);
    }
}

}  // namespace

Dataset parse_dataset_csv(const std::string& content) {
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("CSV: empty input");
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "subject_id" || header[1] != "time")
        throw ParseError("CSV: header must start with subject_id,time");
    Eigen::Index p = 0, q = 0;
    std::size_t col = 2;
    while (col < header.size() && header[col] == "y_" + std::to_string(p + 1)) {
        ++p;
        ++col;
    }
    while (col < header.size() && header[col] == "x_" + std::to_string(q + 1)) {
        ++q;
        ++col;
    }
    if (p < 1 || q < 1 || col != header.size())
        throw ParseError("CSV: header must be subject_id,time,y_1..y_p,x_1..x_q");

    struct Block {
        std::string id;
        std::vector<double> t;
        std::vector<double> y, x;  // row-major
    };
    std::vector<Block> blocks;
    std::vector<std::string> seen_order;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw ParseError("CSV line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(f.size()));
        const std::string& id = f[0];
        if (blocks.empty() || blocks.back().id != id) {
            for (const auto& prev : seen_order)
                if (prev == id)
                    throw ParseError("CSV line " + std::to_string(line_no) + ": subject '" + id +
                                     "' is not contiguous");
            blocks.push_back(Block{id, {}, {}, {}});
            seen_order.push_back(id);
        }
        Block& b = blocks.back();
        const double t = parse_double(f[1], line_no, "time");
        if (!b.t.empty() && t < b.t.back())
            throw ParseError("CSV line " + std::to_string(line_no) + ": subject '" + id +
                             "' times not nondecreasing");
        b.t.push_back(t);
        for (Eigen::Index j = 0; j < p; ++j)
            b.y.push_back(parse_double(f[2 + j], line_no, header[2 + j]));
        for (Eigen::Index j = 0; j < q; ++j)
            b.x.push_back(parse_double(f[2 + p + j], line_no, header[2 + p + j]));
    }
    if (blocks.empty()) throw ParseError("CSV: no data rows");

    Dataset data;
    data.p = p;
    data.q = q;
    for (auto& b : blocks) {
        Subject s;
        s.id = b.id;
        const Eigen::Index n = static_cast<Eigen::Index>(b.t.size());
        s.t = Eigen::Map<Eigen::VectorXd>(b.t.data(), n);
        s.y = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            b.y.data(), n, p);
        s.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            b.x.data(), n, q);
        data.subjects.push_back(std::move(s));
    }
    data.validate();
    return data;
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_dataset_csv(ss.str());
}

std::string dataset_to_csv(const Dataset& data) {
    data.validate();
    std::string out = "subject_id,time";
    for (Eigen::Index j = 0; j < data.p; ++j) out += ",y_" + std::to_string(j + 1);
    for (Eigen::Index j = 0; j < data.q; ++j) out += ",x_" + std::to_string(j + 1);
    out += "\n";
    char buf[64];
    for (const auto& s : data.subjects) {
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            out += s.id;
            std::snprintf(buf, sizeof(buf), ",%.17g", s.t[r]);
            out += buf;
            for (Eigen::Index j = 0; j < data.p; ++j) {
                std::snprintf(buf, sizeof(buf), ",%.17g", s.y(r, j));
                out += buf;
            }
            for (Eigen::Index j = 0; j < data.q; ++j) {
                std::snprintf(buf, sizeof(buf), ",%.17g", s.x(r, j));
                out += buf;
            }
            out += "\n";
        }
    }
    return out;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    out << dataset_to_csv(data);
}

// ---- Theta JSON -------------------------------------------------------------

std::string theta_to_json(const Theta& theta) {
    ordered_json j;
    j["q"] = theta.beta.rows();
    j["p"] = theta.beta.cols();
    j["beta"] = std::vector<double>();
    for (Eigen::Index r = 0; r < theta.beta.rows(); ++r)
        for (Eigen::Index c = 0; c < theta.beta.cols(); ++c) j["beta"].push_back(theta.beta(r, c));
    j["a_row"] = std::vector<double>(theta.a_row.data(), theta.a_row.data() + theta.a_row.size());
    j["psi_lower"] = std::vector<double>();
    for (Eigen::Index r = 0; r < theta.psi.rows(); ++r)
        for (Eigen::Index c = 0; c <= r; ++c) j["psi_lower"].push_back(theta.psi(r, c));
    j["nu"] = theta.nu;
    j["rho1"] = theta.dec.rho1;
    j["rho2"] = theta.dec.rho2;
    return j.dump(2) + "\n";
}

Theta theta_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("theta JSON: ") + e.what());
    }
    try {
        Theta t;
        const Eigen::Index q = j.at("q").get<Eigen::Index>();
        const Eigen::Index p = j.at("p").get<Eigen::Index>();
        const auto beta = j.at("beta").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(beta.size()) != q * p)
            throw ParseError("theta JSON: beta length must be q*p");
        t.beta.resize(q, p);
        for (Eigen::Index r = 0; r < q; ++r)
            for (Eigen::Index c = 0; c < p; ++c) t.beta(r, c) = beta[r * p + c];
        const auto a = j.at("a_row").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(a.size()) != p)
            throw ParseError("theta JSON: a_row length must be p");
        t.a_row = Eigen::Map<const Eigen::RowVectorXd>(a.data(), p);
        const auto psi = j.at("psi_lower").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(psi.size()) != p * (p + 1) / 2)
            throw ParseError("theta JSON: psi_lower length must be p(p+1)/2");
        t.psi.resize(p, p);
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < p; ++r)
            for (Eigen::Index c = 0; c <= r; ++c) {
                t.psi(r, c) = psi[k];
                t.psi(c, r) = psi[k];
                ++k;
            }
        t.nu = j.at("nu").get<double>();
        t.dec.rho1 = j.at("rho1").get<double>();
        t.dec.rho2 = j.at("rho2").get<double>();
        return t;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(std::string("theta JSON: ") + e.what());
    }
}

}  // namespace regmvst
