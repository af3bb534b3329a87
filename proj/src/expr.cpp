// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "exitctl/expr.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "exitctl/errors.hpp"

namespace exitctl::expr {

int arity(Func f) { return (f == Func::min || f == Func::max) ? 2 : 1; }

const char* name(Func f) {
    switch (f) {
        case Func::abs: return "abs";
        case Func::exp: return "exp";
        case Func::log: return "log";
        case Func::sin: return "sin";
        case Func::cos: return "cos";
        case Func::sqrt: return "sqrt";
        case Func::sign: return "sign";
        case Func::tanh: return "tanh";
        case Func::min: return "min";
        case Func::max: return "max";
    }
    return "?";
}

bool Expression::uses_t() const {
    for (const Node& n : nodes)
        if (n.kind == NodeKind::var_t) return true;
    return false;
}

bool Expression::uses_u() const {
    for (const Node& n : nodes)
        if (n.kind == NodeKind::var_u) return true;
    return false;
}

namespace {

constexpr int kMaxDepth = 200;

struct Parser {
    const std::string& text;
    Expression& out;
    std::size_t pos = 0;
    int depth = 0;

    [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
        throw ExprError(msg, at);
    }

    void skip_ws() {
        while (pos < text.size() &&
               (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' ||
                text[pos] == '\r'))
            ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    int push(Node n, std::size_t begin) {
        n.src_begin = static_cast<int>(begin);
        n.src_end = static_cast<int>(pos);
        out.nodes.push_back(n);
        return static_cast<int>(out.nodes.size()) - 1;
    }

    int parse_sum() {
        if (++depth > kMaxDepth) fail("expression nested too deeply", pos);
        const std::size_t begin = pos;
        int lhs = parse_prod();
        for (;;) {
            skip_ws();
            if (pos >= text.size()) break;
            const char c = text[pos];
            if (c != '+' && c != '-') break;
            ++pos;
            const int rhs = parse_prod();
            Node n;
            n.kind = c == '+' ? NodeKind::add : NodeKind::sub;
            n.lhs = lhs;
            n.rhs = rhs;
            lhs = push(n, begin);
        }
        --depth;
        return lhs;
    }

    int parse_prod() {
        const std::size_t begin = pos;
        int lhs = parse_unary();
        for (;;) {
            skip_ws();
            if (pos >= text.size()) break;
            const char c = text[pos];
            if (c != '*' && c != '/') break;
            ++pos;
            const int rhs = parse_unary();
            Node n;
            n.kind = c == '*' ? NodeKind::mul : NodeKind::div;
            n.lhs = lhs;
            n.rhs = rhs;
            lhs = push(n, begin);
        }
        return lhs;
    }

    int parse_unary() {
        if (++depth > kMaxDepth) fail("expression nested too deeply", pos);
        skip_ws();
        const std::size_t begin = pos;
        int result;
        if (pos < text.size() && text[pos] == '-') {
            ++pos;
            const int arg = parse_unary();
            Node n;
            n.kind = NodeKind::neg;
            n.lhs = arg;
            result = push(n, begin);
        } else {
            result = parse_power();
        }
        --depth;
        return result;
    }

    int parse_power() {
        const std::size_t begin = pos;
        const int base = parse_primary();
        skip_ws();
        if (pos < text.size() && text[pos] == '^') {
            ++pos;
            // Exponent re-enters unary so `2^-3` parses and `a^b^c`
            // associates to the right.
            const int exponent = parse_unary();
            Node n;
            n.kind = NodeKind::pow;
            n.lhs = base;
            n.rhs = exponent;
            return push(n, begin);
        }
        return base;
    }

    int parse_primary() {
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of expression", pos);
        const std::size_t begin = pos;
        const char c = text[pos];
        if (c == '(') {
            ++pos;
            const int inner = parse_sum();
            if (!eat(')')) fail("expected ')'", pos);
            return inner;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_')
            return parse_ident();
        fail(std::string("unexpected character '") + c + "'", begin);
    }

    int parse_number() {
        const std::size_t begin = pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        }
        if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
            std::size_t mark = pos;
            ++pos;
            if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
            if (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
                while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
            } else {
                pos = mark;  // trailing 'e' belongs to the next token
            }
        }
        double value = 0.0;
        const char* first = text.data() + begin;
        const char* last = text.data() + pos;
        const auto res = std::from_chars(first, last, value);
        if (res.ec != std::errc() || res.ptr != last)
            fail("invalid numeric literal", begin);
        Node n;
        n.kind = NodeKind::constant;
        n.value = value;
        return push(n, begin);
    }

    int parse_ident() {
        const std::size_t begin = pos;
        while (pos < text.size() &&
               ((text[pos] >= 'a' && text[pos] <= 'z') ||
                (text[pos] >= 'A' && text[pos] <= 'Z') ||
                (text[pos] >= '0' && text[pos] <= '9') || text[pos] == '_'))
            ++pos;
        const std::string id = text.substr(begin, pos - begin);

        skip_ws();
        const bool is_call = pos < text.size() && text[pos] == '(';
        if (is_call) return parse_call(id, begin);

        if (id == "t") {
            Node n;
            n.kind = NodeKind::var_t;
            return push(n, begin);
        }
        if ((id[0] == 'x' || id[0] == 'u') && id.size() > 1) {
            bool digits = true;
            for (std::size_t i = 1; i < id.size(); ++i)
                if (id[i] < '0' || id[i] > '9') digits = false;
            if (digits) {
                const long k = std::strtol(id.c_str() + 1, nullptr, 10);
                const int limit = id[0] == 'x' ? out.dim_x : out.dim_u;
                if (k < 1 || k > limit)
                    fail("variable index out of range: " + id, begin);
                Node n;
                n.kind = id[0] == 'x' ? NodeKind::var_x : NodeKind::var_u;
                n.index = static_cast<int>(k) - 1;
                return push(n, begin);
            }
        }
        fail("unknown identifier: " + id, begin);
    }

    int parse_call(const std::string& id, std::size_t begin) {
        Func f;
        if (id == "abs") f = Func::abs;
        else if (id == "exp") f = Func::exp;
        else if (id == "log") f = Func::log;
        else if (id == "sin") f = Func::sin;
        else if (id == "cos") f = Func::cos;
        else if (id == "sqrt") f = Func::sqrt;
        else if (id == "sign") f = Func::sign;
        else if (id == "tanh") f = Func::tanh;
        else if (id == "min") f = Func::min;
        else if (id == "max") f = Func::max;
        else fail("unknown function: " + id, begin);

        if (!eat('(')) fail("expected '(' after function name", pos);
        const int a = parse_sum();
        int b = -1;
        int got = 1;
        if (eat(',')) {
            b = parse_sum();
            got = 2;
        }
        if (!eat(')')) fail("expected ')' in call to " + id, pos);
        if (got != arity(f))
            fail(id + " expects " + std::to_string(arity(f)) + " argument(s)", begin);
        Node n;
        n.kind = NodeKind::call;
        n.func = f;
        n.lhs = a;
        n.rhs = b;
        return push(n, begin);
    }
};

[[noreturn]] void eval_fail(const Expression& e, const Node& n, const char* what) {
    std::ostringstream msg;
    msg << what << " in '"
        << e.source.substr(static_cast<std::size_t>(n.src_begin),
                           static_cast<std::size_t>(n.src_end - n.src_begin))
        << "'";
    throw ExprError(msg.str(), static_cast<std::size_t>(n.src_begin));
}

double eval_call(const Expression& e, const Node& n, double a, double b) {
    switch (n.func) {
        case Func::abs: return std::fabs(a);
        case Func::exp: return std::exp(a);
        case Func::log:
            if (a <= 0.0) eval_fail(e, n, "log of non-positive value");
            return std::log(a);
        case Func::sin: return std::sin(a);
        case Func::cos: return std::cos(a);
        case Func::sqrt:
            if (a < 0.0) eval_fail(e, n, "sqrt of negative value");
            return std::sqrt(a);
        case Func::sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
        case Func::tanh: return std::tanh(a);
        case Func::min: return std::fmin(a, b);
        case Func::max: return std::fmax(a, b);
    }
    eval_fail(e, n, "bad function node");
}

void print_node(const Expression& e, int idx, std::ostream& os) {
    const Node& n = e.nodes[static_cast<std::size_t>(idx)];
    char buf[40];
    switch (n.kind) {
        case NodeKind::constant:
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            os << buf;
            return;
        case NodeKind::var_t: os << "t"; return;
        case NodeKind::var_x: os << "x" << n.index + 1; return;
        case NodeKind::var_u: os << "u" << n.index + 1; return;
        case NodeKind::neg:
            os << "(-";
            print_node(e, n.lhs, os);
            os << ")";
            return;
        case NodeKind::call:
            os << name(n.func) << "(";
            print_node(e, n.lhs, os);
            if (n.rhs >= 0) {
                os << ", ";
                print_node(e, n.rhs, os);
            }
            os << ")";
            return;
        default: break;
    }
    const char* op = "?";
    switch (n.kind) {
        case NodeKind::add: op = " + "; break;
        case NodeKind::sub: op = " - "; break;
        case NodeKind::mul: op = " * "; break;
        case NodeKind::div: op = " / "; break;
        case NodeKind::pow: op = " ^ "; break;
        default: break;
    }
    os << "(";
    print_node(e, n.lhs, os);
    os << op;
    print_node(e, n.rhs, os);
    os << ")";
}

}  // namespace

Expression parse(const std::string& text, int d, int m) {
    Expression e;
    e.source = text;
    e.dim_x = d;
    e.dim_u = m;
    Parser p{text, e};
    const int root = p.parse_sum();
    p.skip_ws();
    if (p.pos != text.size())
        throw ExprError("unexpected trailing input", p.pos);
    if (root != static_cast<int>(e.nodes.size()) - 1)
        throw HarnessError("parser produced out-of-order root");
    return e;
}

double eval(const Expression& e, double t, std::span<const double> x,
            std::span<const double> u) {
    // Children always precede parents, so one forward pass suffices and
    // evaluation cost is independent of tree depth.
    double stack_buf[64];
    std::vector<double> heap_buf;
    double* vals = stack_buf;
    if (e.nodes.size() > 64) {
        heap_buf.resize(e.nodes.size());
        vals = heap_buf.data();
    }
    for (std::size_t i = 0; i < e.nodes.size(); ++i) {
        const Node& n = e.nodes[i];
        double r = 0.0;
        switch (n.kind) {
            case NodeKind::constant: r = n.value; break;
            case NodeKind::var_t: r = t; break;
            case NodeKind::var_x: r = x[static_cast<std::size_t>(n.index)]; break;
            case NodeKind::var_u: r = u[static_cast<std::size_t>(n.index)]; break;
            case NodeKind::add: r = vals[n.lhs] + vals[n.rhs]; break;
            case NodeKind::sub: r = vals[n.lhs] - vals[n.rhs]; break;
            case NodeKind::mul: r = vals[n.lhs] * vals[n.rhs]; break;
            case NodeKind::div:
                if (vals[n.rhs] == 0.0) eval_fail(e, n, "division by zero");
                r = vals[n.lhs] / vals[n.rhs];
                break;
            case NodeKind::pow: {
                const double base = vals[n.lhs];
                const double expo = vals[n.rhs];
                if (base == 0.0 && expo == 0.0) {
                    r = 1.0;
                } else {
                    r = std::pow(base, expo);
                    if (std::isnan(r) && !std::isnan(base) && !std::isnan(expo))
                        eval_fail(e, n, "invalid power (negative base, fractional exponent)");
                }
                break;
            }
            case NodeKind::neg: r = -vals[n.lhs]; break;
            case NodeKind::call:
                r = eval_call(e, n, vals[n.lhs], n.rhs >= 0 ? vals[n.rhs] : 0.0);
                break;
        }
        vals[i] = r;
    }
    return vals[e.nodes.size() - 1];
}

std::string print(const Expression& e) {
    std::ostringstream os;
    print_node(e, static_cast<int>(e.nodes.size()) - 1, os);
    return os.str();
}

}  // namespace exitctl::expr
