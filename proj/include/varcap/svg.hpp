#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "varcap/io.hpp"

namespace varcap {

/// Renders nested per-probability flexibility bands over the 24 hours as a
/// self-contained SVG (pure geometry, no plotting dependency). base_kvar,
/// when non-empty, is drawn as the dashed base-load midline.
std::string render_fr_svg(const std::vector<FrCsvRow>& rows,
                          const std::vector<double>& base_kvar);

void write_fr_svg(const std::filesystem::path& path,
                  const std::vector<FrCsvRow>& rows,
                  const std::vector<double>& base_kvar);

}  // namespace varcap
