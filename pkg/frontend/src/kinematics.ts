// Client-side forward kinematics mirroring the service's conventions:
// right-handed world frame, origin at the isocenter, +Z up, +Y toward the
// gantry stand; gantry rotates about +Y (0 = beam straight down), collimator
// about the beam axis, couch isocentrically about +Z with the translations
// riding inside the rotated couch frame.  Used only to pose the downloaded
// component meshes; every collision/measure result comes from the server.

import * as THREE from 'three';

import { MachineStateDto } from './api.js';

const DEG = Math.PI / 180;

export function gantryMatrix(s: MachineStateDto): THREE.Matrix4 {
  return new THREE.Matrix4().makeRotationY(s.gantry_deg * DEG);
}

export function collimatorMatrix(s: MachineStateDto): THREE.Matrix4 {
  return gantryMatrix(s).multiply(
    new THREE.Matrix4().makeRotationZ(s.collimator_deg * DEG),
  );
}

export function couchMatrix(s: MachineStateDto, includeVertical = true): THREE.Matrix4 {
  const z = includeVertical ? s.couch_vertical_mm : 0;
  return new THREE.Matrix4()
    .makeRotationZ(s.couch_rotation_deg * DEG)
    .multiply(new THREE.Matrix4().makeTranslation(
      s.couch_lateral_mm, s.couch_longitudinal_mm, z));
}

/** World matrix for each machine component id. */
export function componentMatrix(id: string, s: MachineStateDto): THREE.Matrix4 {
  switch (id) {
    case 'gantry':
      return gantryMatrix(s);
    case 'collimator':
      return collimatorMatrix(s);
    case 'couch_top':
      return couchMatrix(s);
    case 'couch_base':
      return couchMatrix(s, false);
    default:
      throw new Error(`unknown component: ${id}`);
  }
}

/** World matrix for an attachment: parent frame, mount point, own offset. */
export function attachmentMatrix(
  mount: 'collimator' | 'couch',
  mountMm: [number, number, number],
  offsetMm: [number, number, number],
  s: MachineStateDto,
): THREE.Matrix4 {
  const parent = mount === 'collimator' ? collimatorMatrix(s) : couchMatrix(s);
  return parent
    .multiply(new THREE.Matrix4().makeTranslation(...mountMm))
    .multiply(new THREE.Matrix4().makeTranslation(...offsetMm));
}
