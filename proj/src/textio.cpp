#include "coho/textio.hpp"

#include <json.hpp>

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace coho {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string format_matrix(const Matrix& m) {
    std::ostringstream os;
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (i || j) os << ' ';
            os << format_double(m(i, j));
        }
    }
    return os.str();
}

Matrix parse_matrix(std::istream& in, int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (!(in >> m(i, j))) throw Error("parse_matrix: not enough entries");
    return m;
}

Eigen::MatrixXi parse_int_matrix(std::istream& in, int rows, int cols) {
    Eigen::MatrixXi m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (!(in >> m(i, j))) throw Error("parse_int_matrix: not enough entries");
    return m;
}

void write_generator_table(std::ostream& out, const SymbolicCocycle& a) {
    if (a.is_constant()) {
        out << "constant\n" << format_matrix(a.generator(SymbolicPoint::fixed(0))) << "\n";
        return;
    }
    const int k = a.base().alphabet_size();
    const int len = a.window_hi() - a.window_lo() + 1;
    size_t total = 1;
    for (int i = 0; i < len; ++i) total *= size_t(k);
    std::vector<int> word(size_t(len), 0);
    for (size_t idx = 0; idx < total; ++idx) {
        size_t rem = idx;
        for (int i = 0; i < len; ++i) {
            word[size_t(i)] = int(rem % size_t(k));
            rem /= size_t(k);
        }
        for (int s : word) out << char('0' + s);
        out << "\n";
        // emit through a point whose window matches the row's word
        std::vector<int> past{word.front()}, fut{word.back()};
        SymbolicPoint probe(past, word, fut, a.window_lo());
        out << format_matrix(a.generator(probe)) << "\n";
    }
}

SymbolicCocycle read_generator_table(std::istream& in, SftBase base, int win_lo,
                                     int win_hi, int dimension, double hoelder) {
    std::string first;
    in >> first;
    if (first == "constant") {
        Matrix m = parse_matrix(in, dimension, dimension);
        return SymbolicCocycle::constant(std::move(base), std::move(m), hoelder);
    }
    const int k = base.alphabet_size();
    const int len = win_hi - win_lo + 1;
    size_t total = 1;
    for (int i = 0; i < len; ++i) total *= size_t(k);
    std::vector<Matrix> table(total);
    std::vector<char> seen(total, 0);
    std::string word = first;
    for (size_t row = 0; row < total; ++row) {
        if (row > 0 && !(in >> word)) throw Error("read_generator_table: missing row");
        if (int(word.size()) != len) throw Error("read_generator_table: bad word length");
        size_t idx = 0, mul = 1;
        for (char c : word) {
            idx += size_t(c - '0') * mul;
            mul *= size_t(k);
        }
        table[idx] = parse_matrix(in, dimension, dimension);
        seen[idx] = 1;
    }
    for (char c : seen)
        if (!c) throw Error("read_generator_table: table does not cover all windows");
    return SymbolicCocycle::locally_constant(std::move(base), win_lo, win_hi,
                                             std::move(table), hoelder);
}

std::string rational_vec_to_string(const RationalVec& v) {
    std::ostringstream os;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << ' ';
        os << v[i].to_string();
    }
    return os.str();
}

RationalVec parse_rational_vec(const std::string& s) {
    std::istringstream in(s);
    RationalVec v;
    std::string tok;
    while (in >> tok) v.push_back(Rational::parse(tok));
    return v;
}

std::string transfer_map_to_json(const TransferMap& tm) {
    nlohmann::ordered_json j;
    j["anchor"] = tm.anchor().to_string();
    j["depth"] = tm.depth();
    j["beta"] = tm.beta();
    j["holder_constant"] = tm.holder_constant();
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (size_t i = 0; i < tm.size(); ++i) {
        nlohmann::ordered_json row;
        row["point"] = tm.points()[i].to_string();
        row["matrix"] = format_matrix(tm.values()[i]);
        rows.push_back(row);
    }
    j["samples"] = rows;
    return j.dump(2);
}

TransferMap transfer_map_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SymbolicPoint q = SymbolicPoint::parse(j.at("anchor").get<std::string>());
    int depth = j.at("depth").get<int>();
    double beta = j.at("beta").get<double>();
    double holder = j.at("holder_constant").get<double>();
    std::vector<SymbolicPoint> pts;
    std::vector<Matrix> vals;
    for (const auto& row : j.at("samples")) {
        pts.push_back(SymbolicPoint::parse(row.at("point").get<std::string>()));
        std::istringstream ms(row.at("matrix").get<std::string>());
        std::vector<double> entries;
        double v;
        while (ms >> v) entries.push_back(v);
        int d = int(std::lround(std::sqrt(double(entries.size()))));
        if (d * d != int(entries.size()))
            throw Error("transfer_map_from_json: non-square matrix");
        Matrix m(d, d);
        for (int i = 0; i < d; ++i)
            for (int jj = 0; jj < d; ++jj) m(i, jj) = entries[size_t(i * d + jj)];
        vals.push_back(m);
    }
    TransferMap tm;
    tm.set_fields(std::move(q), depth, beta, holder, std::move(pts), std::move(vals));
    return tm;
}

void write_holonomy_csv(std::ostream& out, const std::vector<HolonomyOperator>& hs) {
    out << "x,y,direction,n,error_bound,h_minus_id\n";
    for (const auto& h : hs) {
        const int d = int(h.h.rows());
        out << h.source.to_string() << ',' << h.target.to_string() << ','
            << (h.stable ? "stable" : "unstable") << ',' << h.depth << ','
            << format_double(h.error_bound) << ','
            << format_double(op_norm(h.h - Matrix::Identity(d, d))) << "\n";
    }
}

void write_splitting_csv(std::ostream& out, const SymbolicSplittingField& s) {
    out << "sample,point,block,frame\n";
    for (size_t i = 0; i < s.points.size(); ++i) {
        out << i << ',' << s.points[i].to_string() << ",0," << format_matrix(s.fast[i])
            << "\n";
        out << i << ',' << s.points[i].to_string() << ",1," << format_matrix(s.slow[i])
            << "\n";
    }
}

} // namespace coho
