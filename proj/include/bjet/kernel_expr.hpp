#pragma once

// Text form of kernels: "(amplitude | TAG)" with TAG one of "P n", "Pperp0 n m", "E0 n m",
// "Res0 n m", "Sub m" or "Sub n m", composed left to right with "∘" (or "@").

#include "bjet/model_kernels.hpp"
#include "bjet/poly_parse.hpp"

#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace bjet {

/** Parse a base tag; `offset` is the position of the tag inside the full expression. */
inline KernelBase parse_base_tag(std::string_view tag, std::size_t offset = 0)
{
    std::istringstream in{std::string(tag)};
    std::string name;
    std::vector<int> nums;
    in >> name;
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            int v = std::stoi(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            nums.push_back(v);
        } catch (const std::exception&) {
            throw ParseError("bad dimension '" + tok + "' in base tag", offset);
        }
    }
    auto need = [&](std::size_t c) {
        if (nums.size() != c) throw ParseError("base " + name + " takes " + std::to_string(c) + " dimension(s)", offset);
    };
    try {
        if (name == "P") { need(1); return KernelBase::make(BaseKind::BargmannProj, nums[0], nums[0]); }
        if (name == "Pperp0") { need(2); return KernelBase::make(BaseKind::OrthoProj0, nums[0], nums[1]); }
        if (name == "E0") { need(2); return KernelBase::make(BaseKind::Ext0, nums[0], nums[1]); }
        if (name == "Res0") { need(2); return KernelBase::make(BaseKind::Res0, nums[0], nums[1]); }
        if (name == "Sub") {
            if (nums.size() == 1) return KernelBase::make(BaseKind::SubProj, nums[0], nums[0]);
            need(2);
            return KernelBase::make(BaseKind::SubProj, nums[0], nums[1]);
        }
    } catch (const DimensionError& e) {
        throw ParseError(e.what(), offset);
    }
    throw ParseError("unknown base '" + name + "'", offset);
}

/** Scalar kernels of a composition chain, in written order. */
inline std::vector<PolyKernel> parse_kernel_chain(std::string_view s)
{
    static constexpr std::string_view ring = "\xE2\x88\x98";
    std::vector<PolyKernel> out;
    std::size_t i = 0;
    auto skip = [&] {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    };
    for (;;) {
        skip();
        if (i >= s.size() || s[i] != '(') throw ParseError("expected '('", i);
        std::size_t open = i++;
        int depth = 0;
        std::size_t bar = std::string_view::npos, close = std::string_view::npos;
        for (std::size_t j = i; j < s.size(); ++j) {
            if (s[j] == '(') ++depth;
            else if (s[j] == ')') {
                if (depth == 0) { close = j; break; }
                --depth;
            } else if (s[j] == '|' && depth == 0 && bar == std::string_view::npos) bar = j;
        }
        if (close == std::string_view::npos) throw ParseError("unbalanced '('", open);
        if (bar == std::string_view::npos) throw ParseError("expected '|' between amplitude and base", close);
        KernelBase base = parse_base_tag(s.substr(bar + 1, close - bar - 1), bar + 1);
        PolyParser pp(s.substr(i, bar - i), i);
        MultiPoly amp = pp.parse_all();
        if (pp.max_index() > base.n) throw ParseError("variable index exceeds the base dimension", i);
        amp = narrow(amp, base.n);
        if (!support_is_legal(base, amp)) throw ParseError("amplitude uses variables the base " + base.tag() + " does not carry", i);
        out.emplace_back(base, amp);
        i = close + 1;
        skip();
        if (i >= s.size()) break;
        if (s.substr(i, ring.size()) == ring) i += ring.size();
        else if (s[i] == '@') ++i;
        else throw ParseError("expected '\xE2\x88\x98' between kernels", i);
    }
    return out;
}

/** Left-to-right composition of a written chain; prints as "amplitude | TAG". */
inline PolyKernel compose_expression(std::string_view s)
{
    std::vector<PolyKernel> chain = parse_kernel_chain(s);
    PolyKernel acc = chain.front();
    for (std::size_t t = 1; t < chain.size(); ++t) {
        const KernelBase& a = acc.base;
        const KernelBase& b = chain[t].base;
        if (a.n != b.n || a.tangential() != b.tangential()) throw CompositionError("non-composable bases " + a.tag() + " and " + b.tag());
        acc = PolyKernel(composed_base(a, b), compose_scalar(acc, chain[t]).amp);
    }
    return acc;
}

} // namespace bjet
