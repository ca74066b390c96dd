#pragma once

// Reader for the polynomial text forms produced by MultiPoly::pretty and MultiPoly::canonical.

#include "bjet/poly_core.hpp"

#include <cctype>
#include <string_view>

namespace bjet {

class PolyParser {
public:
    explicit PolyParser(std::string_view text, std::size_t offset = 0) : s_(text), base_(offset) {}

    MultiPoly parse_all()
    {
        MultiPoly p = expr();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
        return p;
    }

    MultiPoly expr()
    {
        skip_ws();
        bool neg = false;
        if (peek() == '+' || peek() == '-') { neg = peek() == '-'; ++pos_; }
        MultiPoly acc = term();
        if (neg) acc = -acc;
        for (;;) {
            skip_ws();
            char c = peek();
            if (c != '+' && c != '-') break;
            ++pos_;
            MultiPoly t = term();
            acc = c == '+' ? acc + t : acc - t;
        }
        return acc;
    }

    std::size_t position() const { return base_ + pos_; }
    int max_index() const { return max_index_; }

private:
    MultiPoly term()
    {
        MultiPoly acc = factor();
        for (;;) {
            skip_ws();
            if (peek() == '*') { ++pos_; acc = acc * factor(); continue; }
            if (match_dot()) { acc = acc * factor(); continue; }
            if (peek() == '/') {
                ++pos_;
                std::size_t at = pos_;
                MultiPoly d = factor();
                acc = acc.scale(constant_of(d, at).inverse());
                continue;
            }
            if (starts_factor()) { acc = acc * factor(); continue; }
            break;
        }
        return acc;
    }

    MultiPoly factor()
    {
        skip_ws();
        if (peek() == '-') { ++pos_; return -factor(); }
        if (peek() == '+') { ++pos_; return factor(); }
        std::size_t at = pos_;
        MultiPoly b = primary();
        skip_ws();
        if (peek() == '^') {
            ++pos_;
            skip_ws();
            bool neg = false;
            if (peek() == '-') { neg = true; ++pos_; }
            long e = integer();
            if (neg) {
                PiCoeff inv = constant_of(b, at).inverse();
                MultiPoly r = MultiPoly::constant(kMaxDim, PiCoeff(1));
                for (long t = 0; t < e; ++t) r = r.scale(inv);
                return r;
            }
            MultiPoly r = MultiPoly::constant(kMaxDim, PiCoeff(1));
            for (long t = 0; t < e; ++t) r = r * b;
            return r;
        }
        return b;
    }

    MultiPoly primary()
    {
        skip_ws();
        char c = peek();
        if (c == '(' || c == '[') {
            char close = c == '(' ? ')' : ']';
            ++pos_;
            MultiPoly e = expr();
            skip_ws();
            if (peek() != close) fail(std::string("expected '") + close + "'");
            ++pos_;
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            mpz_class v{std::string(digits())};
            return MultiPoly::constant(kMaxDim, PiCoeff(Rational(v)));
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t at = pos_;
            std::string id;
            while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) id += s_[pos_++];
            if (id == "pi") return MultiPoly::constant(kMaxDim, PiCoeff::pi_pow(1));
            if (id == "i") return MultiPoly::constant(kMaxDim, PiCoeff::imag_unit());
            bool prime = false;
            if (peek() == '\'') { prime = true; ++pos_; }
            Family f;
            if (id == "z") f = prime ? Family::Zp : Family::Z;
            else if (id == "zb") f = prime ? Family::Zpb : Family::Zb;
            else if (id == "w" && !prime) f = Family::W;
            else if (id == "wb" && !prime) f = Family::Wb;
            else { pos_ = at; fail("unknown identifier '" + id + "'"); }
            if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected variable index");
            long idx = integer();
            if (idx < 1 || idx > kMaxDim) fail("variable index out of range");
            max_index_ = std::max(max_index_, int(idx));
            return MultiPoly::var(kMaxDim, Var{f, int(idx)});
        }
        if (pos_ >= s_.size()) fail("unexpected end of input");
        fail("unexpected character '" + std::string(1, c) + "'");
        return {};
    }

    PiCoeff constant_of(const MultiPoly& p, std::size_t at)
    {
        if (p.is_zero()) { pos_ = at; fail("division by zero"); }
        if (p.size() != 1 || !p.terms().begin()->first.is_one() || !p.terms().begin()->second.is_monomial()) {
            pos_ = at;
            fail("only constant monomials c*pi^j can be inverted");
        }
        return p.terms().begin()->second;
    }

    bool starts_factor() const
    {
        char c = peek();
        return c == '(' || c == '[' || std::isalnum(static_cast<unsigned char>(c));
    }

    bool match_dot()
    {
        if (s_.substr(pos_, 2) == "\xC2\xB7") { pos_ += 2; return true; }
        return false;
    }

    std::string_view digits()
    {
        std::size_t b = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (b == pos_) fail("expected digits");
        return s_.substr(b, pos_ - b);
    }

    long integer()
    {
        auto d = digits();
        if (d.size() > 6) fail("integer too large");
        return std::stol(std::string(d));
    }

    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    [[noreturn]] void fail(const std::string& m) const { throw ParseError(m, base_ + pos_); }

    std::string_view s_;
    std::size_t base_ = 0;
    std::size_t pos_ = 0;
    int max_index_ = 0;
};

/** Restrict a parsed polynomial to n variables per family. */
inline MultiPoly narrow(const MultiPoly& p, int n)
{
    MultiPoly r(n);
    for (auto& [m, c] : p.terms()) r.add_term(m, c);
    return r;
}

/** n < 0 infers the dimension from the largest variable index. */
inline MultiPoly parse_poly(std::string_view text, int n = -1)
{
    PolyParser ps(text);
    MultiPoly p = ps.parse_all();
    int d = n < 0 ? std::max(1, ps.max_index()) : n;
    return narrow(p, d);
}

} // namespace bjet
