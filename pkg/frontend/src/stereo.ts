/**
 * Egocentric stereo rig math.
 *
 * Two virtual cameras sit on the camera mast, separated horizontally by the
 * eye baseline, each with a 110 degree field of view. The rendered gimbal
 * orientation is clamped to the +-90 degree servo travel even if a wilder
 * command slips through. The 63 mm default baseline is a typical stereo
 * figure, not a measured device parameter; override it in EgoParams.
 */

export const EGO_FOV_DEG = 110;
export const DEFAULT_EYE_BASELINE_M = 0.063;
export const GIMBAL_LIMIT_RAD = Math.PI / 2;
export const MAST_HEIGHT_M = 0.35;

export interface EgoParams {
  fovDeg: number;
  eyeBaselineM: number;
  mastHeightM: number;
}

export function defaultEgoParams(): EgoParams {
  return { fovDeg: EGO_FOV_DEG, eyeBaselineM: DEFAULT_EYE_BASELINE_M, mastHeightM: MAST_HEIGHT_M };
}

export function clampGimbalForDisplay(pan: number, tilt: number): { pan: number; tilt: number } {
  const clamp = (v: number) => Math.min(Math.max(v, -GIMBAL_LIMIT_RAD), GIMBAL_LIMIT_RAD);
  return { pan: clamp(pan), tilt: clamp(tilt) };
}

export interface EyePose {
  position: [number, number, number]; // world, z up
  yaw: number; // heading of the optical axis
  pitch: number; // positive looks up
}

export interface StereoPose {
  left: EyePose;
  right: EyePose;
}

/**
 * World poses of both eyes for a rover at (x, y, heading) with the given
 * gimbal state. The two eyes differ only by a translation of one baseline
 * along the camera's lateral axis.
 */
export function stereoEyePoses(
  rover: { x: number; y: number; heading: number },
  gimbal: { pan: number; tilt: number },
  params: EgoParams = defaultEgoParams(),
): StereoPose {
  const { pan, tilt } = clampGimbalForDisplay(gimbal.pan, gimbal.tilt);
  const yaw = rover.heading + pan;
  const lateral: [number, number] = [-Math.sin(yaw), Math.cos(yaw)];
  const half = params.eyeBaselineM / 2;
  const mast: [number, number, number] = [rover.x, rover.y, params.mastHeightM];
  const eye = (side: -1 | 1): EyePose => ({
    position: [mast[0] + side * half * lateral[0], mast[1] + side * half * lateral[1], mast[2]],
    yaw,
    pitch: tilt,
  });
  return { left: eye(1), right: eye(-1) };
}

/** Baseline separation between the two eyes, for sanity checks. */
export function eyeSeparation(pose: StereoPose): number {
  const [lx, ly, lz] = pose.left.position;
  const [rx, ry, rz] = pose.right.position;
  return Math.hypot(rx - lx, ry - ly, rz - lz);
}
