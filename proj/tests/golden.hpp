#pragma once

// Reference-instance constants recomputed with 40-digit arithmetic by
// derive_golden.py. Frame n sits at (5 - 0.3 n) * (1, 1, 1) m.

namespace golden {

inline constexpr double kNoisePsd = 3.9810717055349725e-21;
inline constexpr double kRefGain = 7.962143411069945e-12;
inline constexpr double kGain555 = 1.0616191214759927e-13;
inline constexpr double kCommOneSlot = 0.001875;
inline constexpr double kCompSlotEqual = 1820.7629535366211;
inline constexpr double kMobileExecT5 = 50.3404541393805;
inline constexpr double kMobileFreq = 4652100000.0;
inline constexpr double kCloudletFreqEqual = 193837500000.0;
inline constexpr double kEqualUplinkTotal = 6.163615713366611;
inline constexpr double kEqualDownlinkTotal = 4.5212782970846895;
inline constexpr double kEqualComputeTotal = 87396.621769757812;
inline constexpr double kLambdaEqual555 = 1.9783093412783106e-6;

}  // namespace golden
