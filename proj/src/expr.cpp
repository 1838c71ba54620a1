#include "iqvi/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <utility>

namespace iqvi {

namespace {

enum class Op {
    Const,
    VarT,
    VarX,
    VarXi,
    Neg,
    Abs,
    Exp,
    Sqrt,
    Sin,
    Cos,
    Max0,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
};

const char* fn_name(Op op) {
    switch (op) {
    case Op::Abs: return "abs";
    case Op::Exp: return "exp";
    case Op::Sqrt: return "sqrt";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Max0: return "max0";
    case Op::Min: return "min";
    case Op::Max: return "max";
    case Op::Pow: return "pow";
    default: return "";
    }
}

} // namespace

struct Expr::Node {
    Op op;
    double value = 0.0; // Const
    int index = 0;      // VarX / VarXi
    std::size_t offset = 0;
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_node(Op op, std::size_t off, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->offset = off;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    std::size_t offset;
    double number = 0.0;
    std::string ident;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    // Lazy: a bad character only surfaces once the parser asks for it.
    const Token& peek() {
        if (!ready_) {
            advance();
            ready_ = true;
        }
        return tok_;
    }

    Token take() {
        peek();
        ready_ = false;
        return tok_;
    }

private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        tok_.offset = pos_;
        if (pos_ >= src_.size()) {
            tok_.kind = Tok::End;
            return;
        }
        char c = src_[pos_];
        switch (c) {
        case '+': tok_.kind = Tok::Plus; ++pos_; return;
        case '-': tok_.kind = Tok::Minus; ++pos_; return;
        case '*': tok_.kind = Tok::Star; ++pos_; return;
        case '/': tok_.kind = Tok::Slash; ++pos_; return;
        case '^': tok_.kind = Tok::Caret; ++pos_; return;
        case '(': tok_.kind = Tok::LParen; ++pos_; return;
        case ')': tok_.kind = Tok::RParen; ++pos_; return;
        case ',': tok_.kind = Tok::Comma; ++pos_; return;
        default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = src_.data() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin || !std::isfinite(v))
                throw ParseError("malformed number", pos_);
            pos_ += static_cast<std::size_t>(end - begin);
            tok_.kind = Tok::Number;
            tok_.number = v;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            tok_.kind = Tok::Ident;
            tok_.ident.assign(src_.substr(start, pos_ - start));
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token tok_;
    bool ready_ = false;
};

// ---------------------------------------------------------------------------
// Recursive-descent parser. Precedence: ^  >  unary -  >  * /  >  + -

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) {}

    NodePtr parse() {
        NodePtr e = sum();
        if (lex_.peek().kind != Tok::End)
            throw ParseError("trailing input after expression", lex_.peek().offset);
        return e;
    }

private:
    NodePtr sum() {
        NodePtr left = product();
        for (;;) {
            Tok k = lex_.peek().kind;
            if (k != Tok::Plus && k != Tok::Minus) return left;
            Token t = lex_.take();
            NodePtr right = product();
            left = make_node(k == Tok::Plus ? Op::Add : Op::Sub, t.offset, left, right);
        }
    }

    NodePtr product() {
        NodePtr left = unary();
        for (;;) {
            Tok k = lex_.peek().kind;
            if (k != Tok::Star && k != Tok::Slash) return left;
            Token t = lex_.take();
            NodePtr right = unary();
            left = make_node(k == Tok::Star ? Op::Mul : Op::Div, t.offset, left, right);
        }
    }

    NodePtr unary() {
        if (lex_.peek().kind == Tok::Minus) {
            Token t = lex_.take();
            return make_node(Op::Neg, t.offset, unary());
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        if (lex_.peek().kind == Tok::Caret) {
            Token t = lex_.take();
            // Right-associative; the exponent may carry a unary minus.
            NodePtr exponent = unary();
            return make_node(Op::Pow, t.offset, base, exponent);
        }
        return base;
    }

    NodePtr atom() {
        Token t = lex_.take();
        switch (t.kind) {
        case Tok::Number: {
            auto n = make_node(Op::Const, t.offset);
            const_cast<Expr::Node*>(n.get())->value = t.number;
            return n;
        }
        case Tok::LParen: {
            NodePtr e = sum();
            expect(Tok::RParen, "expected ')'");
            return e;
        }
        case Tok::Ident:
            return ident(t);
        case Tok::End:
            throw ParseError("unexpected end of expression", t.offset);
        default:
            throw ParseError("unexpected token", t.offset);
        }
    }

    NodePtr ident(const Token& t) {
        const std::string& name = t.ident;
        if (name == "t") return make_node(Op::VarT, t.offset);
        if (auto idx = var_index(name, "x")) return var_node(Op::VarX, *idx, t.offset);
        if (auto idx = var_index(name, "xi")) return var_node(Op::VarXi, *idx, t.offset);

        Op op;
        int arity;
        if (name == "abs") { op = Op::Abs; arity = 1; }
        else if (name == "exp") { op = Op::Exp; arity = 1; }
        else if (name == "sqrt") { op = Op::Sqrt; arity = 1; }
        else if (name == "sin") { op = Op::Sin; arity = 1; }
        else if (name == "cos") { op = Op::Cos; arity = 1; }
        else if (name == "max0") { op = Op::Max0; arity = 1; }
        else if (name == "min") { op = Op::Min; arity = 2; }
        else if (name == "max") { op = Op::Max; arity = 2; }
        else if (name == "pow") { op = Op::Pow; arity = 2; }
        else throw ParseError("unknown identifier '" + name + "'", t.offset);

        expect(Tok::LParen, "expected '(' after function name");
        NodePtr a = sum();
        NodePtr b;
        if (arity == 2) {
            if (lex_.peek().kind != Tok::Comma)
                throw ParseError(std::string(fn_name(op)) + " expects 2 arguments",
                                 lex_.peek().offset);
            lex_.take();
            b = sum();
        } else if (lex_.peek().kind == Tok::Comma) {
            throw ParseError(std::string(fn_name(op)) + " expects 1 argument",
                             lex_.peek().offset);
        }
        expect(Tok::RParen, "expected ')'");
        return make_node(op, t.offset, a, b);
    }

    static std::optional<int> var_index(const std::string& name, std::string_view prefix) {
        if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0)
            return std::nullopt;
        int idx = 0;
        for (std::size_t i = prefix.size(); i < name.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(name[i]))) return std::nullopt;
            idx = idx * 10 + (name[i] - '0');
            if (idx > 1000) return std::nullopt;
        }
        return idx;
    }

    static NodePtr var_node(Op op, int idx, std::size_t off) {
        auto n = make_node(op, off);
        const_cast<Expr::Node*>(n.get())->index = idx;
        return n;
    }

    void expect(Tok kind, const char* msg) {
        if (lex_.peek().kind != kind) throw ParseError(msg, lex_.peek().offset);
        lex_.take();
    }

    Lexer lex_;
};

// ---------------------------------------------------------------------------
// Evaluation

double eval_node(const Expr::Node& n, const EvalPoint& p) {
    auto finite = [&n](double v) {
        if (!std::isfinite(v)) throw EvalError("non-finite result", n.offset);
        return v;
    };
    switch (n.op) {
    case Op::Const: return n.value;
    case Op::VarT: return p.t;
    case Op::VarX:
        if (static_cast<std::size_t>(n.index) >= p.x.size())
            throw EvalError("variable x" + std::to_string(n.index) + " not supplied", n.offset);
        return p.x[static_cast<std::size_t>(n.index)];
    case Op::VarXi:
        if (static_cast<std::size_t>(n.index) >= p.xi.size())
            throw EvalError("variable xi" + std::to_string(n.index) + " not supplied", n.offset);
        return p.xi[static_cast<std::size_t>(n.index)];
    case Op::Neg: return -eval_node(*n.a, p);
    case Op::Abs: return std::fabs(eval_node(*n.a, p));
    case Op::Exp: return finite(std::exp(eval_node(*n.a, p)));
    case Op::Sqrt: {
        double v = eval_node(*n.a, p);
        if (v < 0.0) throw EvalError("sqrt of negative value", n.offset);
        return std::sqrt(v);
    }
    case Op::Sin: return std::sin(eval_node(*n.a, p));
    case Op::Cos: return std::cos(eval_node(*n.a, p));
    case Op::Max0: return std::max(eval_node(*n.a, p), 0.0);
    case Op::Add: return finite(eval_node(*n.a, p) + eval_node(*n.b, p));
    case Op::Sub: return finite(eval_node(*n.a, p) - eval_node(*n.b, p));
    case Op::Mul: return finite(eval_node(*n.a, p) * eval_node(*n.b, p));
    case Op::Div: {
        double num = eval_node(*n.a, p);
        double den = eval_node(*n.b, p);
        if (den == 0.0) throw EvalError("division by zero", n.offset);
        return finite(num / den);
    }
    case Op::Pow: {
        double base = eval_node(*n.a, p);
        double e = eval_node(*n.b, p);
        double v = std::pow(base, e);
        if (!std::isfinite(v)) throw EvalError("pow out of domain", n.offset);
        return v;
    }
    case Op::Min: return std::min(eval_node(*n.a, p), eval_node(*n.b, p));
    case Op::Max: return std::max(eval_node(*n.a, p), eval_node(*n.b, p));
    }
    throw EvalError("corrupt expression node", n.offset);
}

// ---------------------------------------------------------------------------
// Printing. Levels: sum=1, product=2, unary=3, pow=4, atom=5.

int prec(Op op) {
    switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
    }
}

void print_node(const Expr::Node& n, std::string& out);

void print_child(const Expr::Node& c, int min_prec, std::string& out) {
    if (prec(c.op) < min_prec) {
        out += '(';
        print_node(c, out);
        out += ')';
    } else {
        print_node(c, out);
    }
}

void print_node(const Expr::Node& n, std::string& out) {
    char buf[40];
    switch (n.op) {
    case Op::Const:
        std::snprintf(buf, sizeof(buf), "%.17g", n.value);
        out += buf;
        return;
    case Op::VarT: out += 't'; return;
    case Op::VarX: out += 'x'; out += std::to_string(n.index); return;
    case Op::VarXi: out += "xi"; out += std::to_string(n.index); return;
    case Op::Neg:
        out += '-';
        print_child(*n.a, 4, out); // anything below pow needs parens
        return;
    case Op::Add:
        print_child(*n.a, 1, out);
        out += " + ";
        print_child(*n.b, 2, out);
        return;
    case Op::Sub:
        print_child(*n.a, 1, out);
        out += " - ";
        print_child(*n.b, 2, out);
        return;
    case Op::Mul:
        print_child(*n.a, 2, out);
        out += '*';
        print_child(*n.b, 3, out);
        return;
    case Op::Div:
        print_child(*n.a, 2, out);
        out += '/';
        print_child(*n.b, 3, out);
        return;
    case Op::Pow:
        print_child(*n.a, 5, out);
        out += '^';
        print_child(*n.b, 3, out); // exponent re-parses as unary
        return;
    default:
        out += fn_name(n.op);
        out += '(';
        print_node(*n.a, out);
        if (n.b) {
            out += ", ";
            print_node(*n.b, out);
        }
        out += ')';
        return;
    }
}

bool equal_nodes(const Expr::Node* a, const Expr::Node* b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->op != b->op) return false;
    if (a->op == Op::Const && a->value != b->value) return false;
    if ((a->op == Op::VarX || a->op == Op::VarXi) && a->index != b->index) return false;
    return equal_nodes(a->a.get(), b->a.get()) && equal_nodes(a->b.get(), b->b.get());
}

void scan(const Expr::Node* n, bool& uses_t, int& max_x, int& max_xi) {
    if (!n) return;
    if (n->op == Op::VarT) uses_t = true;
    if (n->op == Op::VarX) max_x = std::max(max_x, n->index);
    if (n->op == Op::VarXi) max_xi = std::max(max_xi, n->index);
    scan(n->a.get(), uses_t, max_x, max_xi);
    scan(n->b.get(), uses_t, max_x, max_xi);
}

} // namespace

Expr Expr::parse(std::string_view source) {
    Parser parser(source);
    return Expr(parser.parse());
}

double Expr::eval(const EvalPoint& p) const {
    if (!root_) throw EvalError("empty expression", 0);
    return eval_node(*root_, p);
}

std::string Expr::str() const {
    if (!root_) return "";
    std::string out;
    print_node(*root_, out);
    return out;
}

bool Expr::operator==(const Expr& other) const {
    return equal_nodes(root_.get(), other.root_.get());
}

bool Expr::uses_t() const {
    bool t = false;
    int mx = -1, mxi = -1;
    scan(root_.get(), t, mx, mxi);
    return t;
}

bool Expr::uses_xi() const { return max_xi_index() >= 0; }

int Expr::max_x_index() const {
    bool t = false;
    int mx = -1, mxi = -1;
    scan(root_.get(), t, mx, mxi);
    return mx;
}

int Expr::max_xi_index() const {
    bool t = false;
    int mx = -1, mxi = -1;
    scan(root_.get(), t, mx, mxi);
    return mxi;
}

} // namespace iqvi
