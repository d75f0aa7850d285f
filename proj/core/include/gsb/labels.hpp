#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace gsb {

/// The five firearm categories, in the order used for every table, class
/// index and report row.
enum class FirearmClass { Rifle = 0, SubmachineGun = 1, HandgunPistol = 2, MachineGun = 3, Shotgun = 4 };

inline constexpr int kNumClasses = 5;
inline constexpr std::array<FirearmClass, kNumClasses> kAllClasses = {
    FirearmClass::Rifle, FirearmClass::SubmachineGun, FirearmClass::HandgunPistol, FirearmClass::MachineGun,
    FirearmClass::Shotgun};

constexpr int class_index(FirearmClass c) { return static_cast<int>(c); }
constexpr FirearmClass class_at(int index) { return kAllClasses.at(static_cast<std::size_t>(index)); }

/// Human-readable name ("Submachine Gun").
std::string_view class_name(FirearmClass c);
/// Stable identifier used in manifests and record files ("submachine_gun").
std::string_view class_key(FirearmClass c);
std::optional<FirearmClass> class_from_key(std::string_view key);

enum class DetectionLabel { Gunshot, NoGunshot };

std::string_view detection_key(DetectionLabel d);
std::optional<DetectionLabel> detection_from_key(std::string_view key);

}  // namespace gsb
