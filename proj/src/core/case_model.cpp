#include "case_model.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

namespace gridmask {

namespace {

// Cursor over the case text that skips MATLAB comments and tracks position.
class Scanner {
public:
    explicit Scanner(const std::string& t) : text_(t) {}

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return eof() ? '\0' : text_[pos_]; }
    int line() const { return line_; }
    int col() const { return col_; }

    void advance() {
        if (eof()) return;
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_comment() {
        while (!eof() && peek() != '\n') advance();
    }

    // Skips blanks and comments; newlines too when eat_newlines is set.
    void skip_space(bool eat_newlines) {
        while (!eof()) {
            char c = peek();
            if (c == '%') {
                skip_comment();
            } else if (c == '.' && text_.compare(pos_, 3, "...") == 0) {
                skip_comment();  // line continuation
                advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || (eat_newlines && c == '\n')) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string word() {
        std::string w;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '.')) {
            w += peek();
            advance();
        }
        return w;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorCode::MalformedFile,
                    "line " + std::to_string(line_) + ", column " + std::to_string(col_) + ": " + what);
    }

    double number() {
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("expected a number");
        std::size_t n = static_cast<std::size_t>(end - begin);
        for (std::size_t i = 0; i < n; ++i) advance();
        return v;
    }

    // Skips to the end of the current statement (a ';' outside brackets).
    void skip_statement() {
        int depth = 0;
        while (!eof()) {
            char c = peek();
            if (c == '%') {
                skip_comment();
                continue;
            }
            if (c == '\'') {
                advance();
                while (!eof() && peek() != '\'' && peek() != '\n') advance();
            } else if (c == '[' || c == '{') {
                ++depth;
            } else if (c == ']' || c == '}') {
                --depth;
            } else if (depth <= 0 && (c == ';' || c == '\n')) {
                advance();
                return;
            }
            advance();
        }
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

struct Matrix {
    std::vector<std::vector<double>> rows;
    int line = 0;
};

Matrix read_matrix(Scanner& sc) {
    Matrix m;
    m.line = sc.line();
    std::vector<double> row;
    auto flush = [&]() {
        if (!row.empty()) m.rows.push_back(std::move(row));
        row.clear();
    };
    for (;;) {
        sc.skip_space(false);
        if (sc.eof()) sc.fail("unterminated matrix");
        char c = sc.peek();
        if (c == ']') {
            sc.advance();
            flush();
            break;
        }
        if (c == ';' || c == '\n') {
            sc.advance();
            flush();
            continue;
        }
        if (c == ',') {
            sc.advance();
            continue;
        }
        std::string s(1, c);
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
            row.push_back(sc.number());
        } else if (std::isalpha(static_cast<unsigned char>(c))) {
            std::string w = sc.word();
            if (w == "Inf" || w == "inf")
                row.push_back(std::numeric_limits<double>::infinity());
            else
                sc.fail("unexpected token '" + w + "' in matrix");
        } else {
            sc.fail("unexpected character '" + s + "' in matrix");
        }
    }
    // Optional trailing ';'
    sc.skip_space(false);
    if (sc.peek() == ';') sc.advance();
    for (std::size_t i = 1; i < m.rows.size(); ++i) {
        if (m.rows[i].size() != m.rows[0].size())
            throw Error(ErrorCode::MalformedFile, "matrix starting at line " + std::to_string(m.line) +
                                                      ": row " + std::to_string(i + 1) +
                                                      " has inconsistent column count");
    }
    return m;
}

double col_or(const std::vector<double>& row, std::size_t c, double def) {
    return c < row.size() ? row[c] : def;
}

}  // namespace

int Network::bus_index(int ext_id) const {
    for (int i = 0; i < n_b(); ++i)
        if (buses[i].ext_id == ext_id) return i;
    return -1;
}

bool is_connected(int n_b, const std::vector<std::pair<int, int>>& edges) {
    if (n_b <= 0) return false;
    std::vector<std::vector<int>> adj(n_b);
    for (auto [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<char> seen(n_b, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                q.push(v);
            }
    }
    return count == n_b;
}

Network parse_case(const std::string& text) {
    Scanner sc(text);
    Network net;
    std::map<std::string, Matrix> mats;
    bool have_base = false;

    while (!sc.eof()) {
        sc.skip_space(true);
        if (sc.eof()) break;
        std::string w = sc.word();
        if (w == "function") {
            sc.skip_space(false);
            std::string out = sc.word();
            sc.skip_space(false);
            if (sc.peek() == '=') {
                sc.advance();
                sc.skip_space(false);
                net.name = sc.word();
            }
            sc.skip_statement();
            continue;
        }
        if (w.rfind("mpc.", 0) != 0) {
            if (w.empty()) sc.advance();
            sc.skip_statement();
            continue;
        }
        std::string field = w.substr(4);
        sc.skip_space(false);
        if (sc.peek() != '=') sc.fail("expected '=' after " + w);
        sc.advance();
        sc.skip_space(false);
        if (field == "baseMVA") {
            net.base_mva = sc.number();
            have_base = true;
            sc.skip_statement();
        } else if (sc.peek() == '[') {
            sc.advance();
            mats[field] = read_matrix(sc);
        } else {
            sc.skip_statement();
        }
    }

    if (!have_base) throw Error(ErrorCode::MalformedFile, "missing mpc.baseMVA");
    if (!(net.base_mva > 0)) throw Error(ErrorCode::MalformedFile, "baseMVA must be positive");
    for (const char* need : {"bus", "gen", "branch"})
        if (!mats.count(need)) throw Error(ErrorCode::MalformedFile, std::string("missing mpc.") + need);

    const Matrix& mb = mats["bus"];
    const Matrix& mg = mats["gen"];
    const Matrix& ml = mats["branch"];
    if (mb.rows.empty()) throw Error(ErrorCode::MalformedFile, "bus table is empty");
    if (mb.rows[0].size() < 4)
        throw Error(ErrorCode::MalformedFile, "line " + std::to_string(mb.line) + ": bus table needs at least 4 columns");
    if (!mg.rows.empty() && mg.rows[0].size() < 6)
        throw Error(ErrorCode::MalformedFile, "line " + std::to_string(mg.line) + ": gen table needs at least 6 columns");
    if (!ml.rows.empty() && ml.rows[0].size() < 5)
        throw Error(ErrorCode::MalformedFile, "line " + std::to_string(ml.line) + ": branch table needs at least 5 columns");

    std::map<int, int> index;
    std::vector<double> vm_col;
    for (const auto& r : mb.rows) {
        Bus b;
        b.ext_id = static_cast<int>(r[0]);
        if (index.count(b.ext_id))
            throw Error(ErrorCode::MalformedFile, "duplicate bus id " + std::to_string(b.ext_id));
        int type = static_cast<int>(r[1]);
        if (type < 1 || type > 3)
            throw Error(ErrorCode::MalformedFile, "bus " + std::to_string(b.ext_id) + ": unsupported bus type " + std::to_string(type));
        b.kind = static_cast<BusKind>(type);
        b.load = {r[2], r[3]};
        b.base_kv = col_or(r, 9, 0.0);
        b.vmax = col_or(r, 11, 1.05);
        b.vmin = col_or(r, 12, 0.95);
        b.voltage_setpoint = col_or(r, 7, 1.0);
        index[b.ext_id] = net.n_b();
        net.buses.push_back(b);
    }

    for (const auto& r : mg.rows) {
        Generator g;
        auto it = index.find(static_cast<int>(r[0]));
        if (it == index.end())
            throw Error(ErrorCode::MalformedFile, "generator at unknown bus " + std::to_string(static_cast<int>(r[0])));
        g.bus = it->second;
        g.pg = r[1];
        g.qg = r[2];
        g.vg = r[5];
        g.in_service = col_or(r, 7, 1.0) > 0;
        g.pmax = col_or(r, 8, std::numeric_limits<double>::infinity());
        g.pmin = col_or(r, 9, 0.0);
        net.gens.push_back(g);
    }
    for (auto& b : net.buses) b.has_generator = false;
    std::vector<char> vset(net.n_b(), 0);
    for (const auto& g : net.gens) {
        if (!g.in_service) continue;
        Bus& b = net.buses[g.bus];
        b.gen_p += g.pg / net.base_mva;
        if (g.pmax > 0) b.has_generator = true;
        if (!vset[g.bus]) {
            b.voltage_setpoint = g.vg;
            vset[g.bus] = 1;
        }
    }

    int slack = -1;
    for (int i = 0; i < net.n_b(); ++i) {
        Bus& b = net.buses[i];
        if (b.kind == BusKind::Slack) {
            if (slack >= 0) throw Error(ErrorCode::MalformedFile, "more than one slack bus");
            slack = i;
        } else if (b.kind == BusKind::PV && !vset[i]) {
            b.kind = BusKind::PQ;  // no regulating unit in service
        }
    }
    if (slack < 0) throw Error(ErrorCode::NoSlackBus, "case has no slack (type 3) bus");
    net.reference_bus = slack;

    std::vector<std::pair<int, int>> edges;
    for (const auto& r : ml.rows) {
        if (col_or(r, 10, 1.0) <= 0) continue;
        Branch br;
        auto f = index.find(static_cast<int>(r[0]));
        auto t = index.find(static_cast<int>(r[1]));
        if (f == index.end() || t == index.end())
            throw Error(ErrorCode::MalformedFile, "branch references unknown bus");
        br.from = f->second;
        br.to = t->second;
        if (br.from == br.to) throw Error(ErrorCode::MalformedFile, "branch with identical end buses");
        br.r = r[2];
        br.x = r[3];
        if (std::abs(cplx(br.r, br.x)) <= 0)
            throw Error(ErrorCode::MalformedFile, "branch with zero impedance");
        br.b_charging = r[4];
        double rate = col_or(r, 5, 0.0);
        br.rating = rate > 0 ? rate : std::numeric_limits<double>::infinity();
        br.tap = col_or(r, 8, 0.0);
        br.shift = col_or(r, 9, 0.0);
        br.is_transformer = br.tap != 0.0;
        edges.emplace_back(br.from, br.to);
        net.branches.push_back(br);
    }
    if (net.branches.empty()) throw Error(ErrorCode::DisconnectedGraph, "case has no in-service branches");
    if (!is_connected(net.n_b(), edges)) throw Error(ErrorCode::DisconnectedGraph, "bus graph is not connected");
    return net;
}

Network load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

std::string serialize_case(const Network& net) {
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::ostringstream o;
    o << "function mpc = " << (net.name.empty() ? "case" : net.name) << "\n";
    o << "mpc.version = '2';\n";
    o << "mpc.baseMVA = " << num(net.base_mva) << ";\n";
    o << "mpc.bus = [\n";
    for (const auto& b : net.buses) {
        o << "\t" << b.ext_id << "\t" << static_cast<int>(b.kind) << "\t" << num(b.load.real()) << "\t"
          << num(b.load.imag()) << "\t0\t0\t1\t" << num(b.voltage_setpoint) << "\t0\t" << num(b.base_kv)
          << "\t1\t" << num(b.vmax) << "\t" << num(b.vmin) << ";\n";
    }
    o << "];\n";
    o << "mpc.gen = [\n";
    for (const auto& g : net.gens) {
        o << "\t" << net.buses[g.bus].ext_id << "\t" << num(g.pg) << "\t" << num(g.qg) << "\t0\t0\t" << num(g.vg)
          << "\t" << num(net.base_mva) << "\t" << (g.in_service ? 1 : 0) << "\t"
          << (std::isinf(g.pmax) ? std::string("Inf") : num(g.pmax)) << "\t" << num(g.pmin) << ";\n";
    }
    o << "];\n";
    o << "mpc.branch = [\n";
    for (const auto& br : net.branches) {
        o << "\t" << net.buses[br.from].ext_id << "\t" << net.buses[br.to].ext_id << "\t" << num(br.r) << "\t"
          << num(br.x) << "\t" << num(br.b_charging) << "\t" << (std::isinf(br.rating) ? std::string("0") : num(br.rating))
          << "\t0\t0\t" << num(br.tap) << "\t" << num(br.shift) << "\t1\t-360\t360;\n";
    }
    o << "];\n";
    return o.str();
}

void set_protected(Network& net, const std::vector<int>& branch_ids) {
    for (int l : branch_ids) {
        if (l < 0 || l >= net.n_br()) throw Error(ErrorCode::InvalidBranchId, "protected line out of range");
        net.branches[l].is_protected = true;
    }
}

std::vector<std::vector<Incidence>> adjacency(const Network& net) {
    std::vector<std::vector<Incidence>> adj(net.n_b());
    for (int l = 0; l < net.n_br(); ++l) {
        adj[net.branches[l].from].push_back({l, net.branches[l].to});
        adj[net.branches[l].to].push_back({l, net.branches[l].from});
    }
    return adj;
}

std::vector<Incidence> neighbors(const Network& net, int bus) {
    if (bus < 0 || bus >= net.n_b()) throw Error(ErrorCode::InvalidBusId, "bus id out of range");
    std::vector<Incidence> out;
    for (int l = 0; l < net.n_br(); ++l) {
        const Branch& br = net.branches[l];
        if (br.from == bus) out.push_back({l, br.to});
        else if (br.to == bus) out.push_back({l, br.from});
    }
    return out;
}

bool is_islanding(const Network& net, int l) {
    if (l < 0 || l >= net.n_br()) throw Error(ErrorCode::InvalidBranchId, "branch id out of range");
    std::vector<std::pair<int, int>> edges;
    for (int k = 0; k < net.n_br(); ++k)
        if (k != l) edges.emplace_back(net.branches[k].from, net.branches[k].to);
    return !is_connected(net.n_b(), edges);
}

bool is_generator_bus(const Network& net, int bus) {
    return net.buses[bus].has_generator;
}

}  // namespace gridmask
