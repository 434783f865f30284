#include <aimc/presets.hpp>
#include <aimc/response.hpp>

#include <cstdio>

int main() {
  const auto m = aimc::ResponseModel::generic_linear(2.0, 0.3);
  std::printf("%zu presets, symmetric point %.1f\n", aimc::preset_names().size(), m.symmetric_point());
  return m.symmetric_point() == 0.6 ? 0 : 1;
}
