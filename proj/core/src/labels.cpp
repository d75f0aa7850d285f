#include "gsb/labels.hpp"

namespace gsb {
namespace {
constexpr std::array<std::string_view, kNumClasses> kNames = {"Rifle", "Submachine Gun", "Handgun/Pistol",
                                                              "Machine Gun", "Shotgun"};
constexpr std::array<std::string_view, kNumClasses> kKeys = {"rifle", "submachine_gun", "handgun_pistol",
                                                             "machine_gun", "shotgun"};
}  // namespace

std::string_view class_name(FirearmClass c) { return kNames[static_cast<std::size_t>(class_index(c))]; }
std::string_view class_key(FirearmClass c) { return kKeys[static_cast<std::size_t>(class_index(c))]; }

std::optional<FirearmClass> class_from_key(std::string_view key) {
  for (int i = 0; i < kNumClasses; ++i)
    if (kKeys[static_cast<std::size_t>(i)] == key) return class_at(i);
  return std::nullopt;
}

std::string_view detection_key(DetectionLabel d) { return d == DetectionLabel::Gunshot ? "gunshot" : "no_gunshot"; }

std::optional<DetectionLabel> detection_from_key(std::string_view key) {
  if (key == "gunshot") return DetectionLabel::Gunshot;
  if (key == "no_gunshot") return DetectionLabel::NoGunshot;
  return std::nullopt;
}

}  // namespace gsb
