#pragma once

#include "vinesim/growth.hpp"
#include "vinesim/kinematics.hpp"

namespace vinesim {

inline bool operator==(const Quaternion& a, const Quaternion& b)
{
    return a.w == b.w && a.x == b.x && a.y == b.y && a.z == b.z;
}

/// One operator sample: joystick orientation, the two pots, the direction
/// switch and the e-stop button.
struct TeleopInput {
    Quaternion q;
    double r_p = 0.0;  ///< counts
    double r_m = 0.0;  ///< counts
    Direction d = Direction::Growth;
    bool estop = false;

    bool operator==(const TeleopInput&) const = default;
};

}  // namespace vinesim
