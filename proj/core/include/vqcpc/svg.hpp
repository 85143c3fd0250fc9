#pragma once
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace vqcpc {

// Minimal static bar chart, enough for token-histogram figures.
void write_bar_chart_svg(const std::filesystem::path& file, const std::string& title,
                         const std::vector<std::pair<std::string, double>>& bars);

}  // namespace vqcpc
