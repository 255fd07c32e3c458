#pragma once

#include <optional>
#include <string>
#include <vector>

namespace bess {

/// Named, contiguous blocks in the flat solver vector. A block holds `steps`
/// rows of `width` entries; entry (k, j) lives at offset + k * width + j.
class VariableLayout {
public:
    struct Block {
        std::string name;
        int offset{0};
        int steps{0};
        int width{1};

        [[nodiscard]] int size() const noexcept { return steps * width; }
    };

    /// Appends a block and returns its offset. Names must be unique.
    int add(const std::string& name, int steps, int width = 1);

    [[nodiscard]] bool has(const std::string& name) const;
    [[nodiscard]] const Block& block(const std::string& name) const;
    [[nodiscard]] const std::vector<Block>& blocks() const noexcept { return blocks_; }
    [[nodiscard]] int size() const noexcept { return size_; }

    [[nodiscard]] int index(const std::string& name, int k, int j = 0) const;

    /// "name[k]" for width-1 blocks, "name[k][j]" otherwise.
    [[nodiscard]] std::string label(int index) const;
    [[nodiscard]] std::optional<int> find(const std::string& label) const;

    [[nodiscard]] std::vector<std::string> labels() const;

private:
    std::vector<Block> blocks_;
    int size_{0};
};

}  // namespace bess
