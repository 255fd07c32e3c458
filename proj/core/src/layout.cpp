#include "bess/layout.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include "bess/erm.hpp"

namespace bess {

int VariableLayout::add(const std::string& name, int steps, int width) {
    if (name.empty() || name.find('[') != std::string::npos) throw DomainError("invalid block name '" + name + "'");
    if (steps < 0 || width < 1) throw DomainError("block '" + name + "' has invalid dimensions");
    if (has(name)) throw DomainError("block '" + name + "' already exists");
    blocks_.push_back(Block{name, size_, steps, width});
    size_ += steps * width;
    return blocks_.back().offset;
}

bool VariableLayout::has(const std::string& name) const {
    return std::any_of(blocks_.begin(), blocks_.end(), [&](const Block& b) { return b.name == name; });
}

const VariableLayout::Block& VariableLayout::block(const std::string& name) const {
    for (const Block& b : blocks_)
        if (b.name == name) return b;
    throw std::out_of_range("no block named '" + name + "'");
}

int VariableLayout::index(const std::string& name, int k, int j) const {
    const Block& b = block(name);
    if (k < 0 || k >= b.steps || j < 0 || j >= b.width) {
        throw std::out_of_range("index out of range in block '" + name + "'");
    }
    return b.offset + k * b.width + j;
}

std::string VariableLayout::label(int index) const {
    for (const Block& b : blocks_) {
        if (index < b.offset || index >= b.offset + b.size()) continue;
        const int local = index - b.offset;
        std::string out = b.name + "[" + std::to_string(local / b.width) + "]";
        if (b.width > 1) out += "[" + std::to_string(local % b.width) + "]";
        return out;
    }
    throw std::out_of_range("index " + std::to_string(index) + " outside layout");
}

std::optional<int> VariableLayout::find(const std::string& label) const {
    const auto open = label.find('[');
    if (open == std::string::npos || label.back() != ']') return std::nullopt;
    const std::string name = label.substr(0, open);
    if (!has(name)) return std::nullopt;

    std::vector<int> idx;
    std::size_t pos = open;
    while (pos < label.size()) {
        if (label[pos] != '[') return std::nullopt;
        const auto close = label.find(']', pos);
        if (close == std::string::npos) return std::nullopt;
        int v = 0;
        const auto [ptr, ec] = std::from_chars(label.data() + pos + 1, label.data() + close, v);
        if (ec != std::errc() || ptr != label.data() + close) return std::nullopt;
        idx.push_back(v);
        pos = close + 1;
    }
    const Block& b = block(name);
    if (idx.size() != (b.width > 1 ? 2u : 1u)) return std::nullopt;
    const int k = idx[0];
    const int j = idx.size() > 1 ? idx[1] : 0;
    if (k < 0 || k >= b.steps || j < 0 || j >= b.width) return std::nullopt;
    return b.offset + k * b.width + j;
}

std::vector<std::string> VariableLayout::labels() const {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(size_));
    for (int i = 0; i < size_; ++i) out.push_back(label(i));
    return out;
}

}  // namespace bess
