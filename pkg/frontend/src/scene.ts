/**
 * Three.js scene: primitive-shape approximations of the rover, arm, gimbal
 * mast, and antennas (boxes and cylinders from the collision footprint; no
 * textured meshes). The world is z-up to match the twin's frame.
 */

import * as THREE from "three";

import type { HelloRecord } from "./protocol.js";
import type { TwinView } from "./store.js";
import { clampGimbalForDisplay, stereoEyePoses, type EgoParams } from "./stereo.js";

export interface SceneParts {
  scene: THREE.Scene;
  rover: THREE.Group;
  mast: THREE.Group;
  jointGroups: THREE.Group[];
  gripperJaws: [THREE.Mesh, THREE.Mesh];
  antennas: Map<string, { rod: THREE.Group; target: THREE.Group }>;
}

function material(color: number, opacity = 1): THREE.MeshLambertMaterial {
  return new THREE.MeshLambertMaterial({ color, transparent: opacity < 1, opacity });
}

function antennaRod(color: number, opacity = 1): THREE.Group {
  const group = new THREE.Group();
  const rod = new THREE.Mesh(new THREE.CylinderGeometry(0.015, 0.015, 0.9, 12), material(color, opacity));
  rod.rotation.z = Math.PI / 2; // cylinder axis along x: the dipole axis
  rod.position.z = 0.25;
  group.add(rod);
  const base = new THREE.Mesh(new THREE.CylinderGeometry(0.05, 0.07, 0.25, 12), material(0x555b61, opacity));
  base.rotation.x = Math.PI / 2;
  base.position.z = 0.125;
  group.add(base);
  return group;
}

export function buildScene(hello: HelloRecord): SceneParts {
  const scene = new THREE.Scene();
  scene.background = new THREE.Color(0x10140f);
  scene.add(new THREE.AmbientLight(0xffffff, 0.7));
  const sun = new THREE.DirectionalLight(0xffffff, 1.2);
  sun.position.set(3, 2, 6);
  scene.add(sun);

  const grid = new THREE.GridHelper(20, 40, 0x3a4a3a, 0x273227);
  grid.rotation.x = Math.PI / 2; // three grids are y-up; our world is z-up
  scene.add(grid);

  // rover body and wheels
  const rover = new THREE.Group();
  const body = new THREE.Mesh(new THREE.BoxGeometry(0.45, hello.wheel_base, 0.12), material(0x8d99ae));
  body.position.z = 0.12;
  rover.add(body);
  const nose = new THREE.Mesh(new THREE.BoxGeometry(0.1, 0.1, 0.04), material(0xef8354));
  nose.position.set(0.25, 0, 0.14);
  rover.add(nose);
  for (const side of [-1, 1]) {
    const wheel = new THREE.Mesh(new THREE.CylinderGeometry(0.0762, 0.0762, 0.03, 18), material(0x2b2d42));
    wheel.position.set(0, (side * hello.wheel_base) / 2, 0.0762);
    rover.add(wheel);
  }

  // camera mast with gimbal head
  const mastPole = new THREE.Mesh(new THREE.CylinderGeometry(0.015, 0.015, 0.3, 8), material(0x4a4e69));
  mastPole.rotation.x = Math.PI / 2;
  mastPole.position.set(-0.1, 0, 0.27);
  rover.add(mastPole);
  const mast = new THREE.Group();
  mast.position.set(-0.1, 0, 0.42);
  const head = new THREE.Mesh(new THREE.BoxGeometry(0.06, 0.16, 0.04), material(0x22223b));
  mast.add(head);
  rover.add(mast);

  // arm: one rotating group per link, child offset groups carry the geometry
  const mount = new THREE.Group();
  mount.position.set(...hello.chain.mount);
  rover.add(mount);
  const jointGroups: THREE.Group[] = [];
  let parent: THREE.Group = mount;
  for (const link of hello.chain.links) {
    const joint = new THREE.Group();
    parent.add(joint);
    jointGroups.push(joint);
    const offset = new THREE.Group();
    offset.position.set(...link.offset);
    joint.add(offset);
    const length = Math.hypot(...link.offset);
    if (length > 1e-6) {
      const segment = new THREE.Mesh(
        new THREE.CylinderGeometry(0.018, 0.018, length, 10),
        material(0xc9ada7),
      );
      const mid = new THREE.Vector3(...link.offset).multiplyScalar(0.5);
      segment.position.copy(mid);
      segment.quaternion.setFromUnitVectors(
        new THREE.Vector3(0, 1, 0),
        new THREE.Vector3(...link.offset).normalize(),
      );
      joint.add(segment);
    }
    parent = offset;
  }
  const jaws: THREE.Mesh[] = [];
  for (const side of [-1, 1]) {
    const jaw = new THREE.Mesh(new THREE.BoxGeometry(0.06, 0.01, 0.02), material(0xf2e9e4));
    jaw.position.set(hello.chain.gripper_offset[0] / 2, side * 0.02, 0);
    parent.add(jaw);
    jaws.push(jaw);
  }

  scene.add(rover);

  // antennas: live rod plus a translucent ghost at the target orientation
  const antennas = new Map<string, { rod: THREE.Group; target: THREE.Group }>();
  for (const spec of hello.antennas) {
    const rod = antennaRod(0xd90429);
    rod.position.set(spec.x, spec.y, 0);
    rod.rotation.z = spec.orientation;
    scene.add(rod);
    const target = antennaRod(0x43aa8b, 0.35);
    target.position.set(spec.x, spec.y, 0);
    target.rotation.z = spec.target_orientation;
    scene.add(target);
    antennas.set(spec.id, { rod, target });
  }

  return { scene, rover, mast, jointGroups, gripperJaws: jaws as [THREE.Mesh, THREE.Mesh], antennas };
}

export function updateScene(parts: SceneParts, view: TwinView): void {
  const hello = view.hello;
  if (!hello) return;
  parts.rover.position.set(view.rover.x, view.rover.y, 0);
  parts.rover.rotation.set(0, 0, view.rover.heading);

  const gimbal = clampGimbalForDisplay(view.gimbal.pan, view.gimbal.tilt);
  parts.mast.rotation.set(0, -gimbal.tilt, gimbal.pan);

  view.joints.forEach((angle, i) => {
    const link = hello.chain.links[i];
    const joint = parts.jointGroups[i];
    if (!link || !joint) return;
    joint.quaternion.setFromAxisAngle(new THREE.Vector3(...link.axis).normalize(), angle);
  });
  const jawGap = 0.005 + view.gripper * 0.03;
  parts.gripperJaws[0].position.y = -jawGap;
  parts.gripperJaws[1].position.y = jawGap;

  for (const [id, ant] of view.antennas) {
    const objs = parts.antennas.get(id);
    if (!objs) continue;
    objs.rod.position.set(ant.x, ant.y, 0);
    objs.rod.rotation.z = ant.orientation;
    const rodMesh = objs.rod.children[0] as THREE.Mesh;
    (rodMesh.material as THREE.MeshLambertMaterial).color.set(
      ant.grasped ? 0xf9c74f : ant.aligned ? 0x43aa8b : 0xd90429,
    );
  }
}

/** Two perspective cameras with the egocentric FOV, one per eye. */
export function createStereoCameras(params: EgoParams, aspect: number): [THREE.PerspectiveCamera, THREE.PerspectiveCamera] {
  const make = () => {
    const cam = new THREE.PerspectiveCamera(params.fovDeg, aspect, 0.05, 100);
    cam.up.set(0, 0, 1);
    return cam;
  };
  return [make(), make()];
}

export function placeStereoCameras(
  cameras: [THREE.PerspectiveCamera, THREE.PerspectiveCamera],
  view: TwinView,
  params: EgoParams,
): void {
  const poses = stereoEyePoses(view.rover, view.gimbal, params);
  const sides = [poses.left, poses.right] as const;
  cameras.forEach((cam, i) => {
    const eye = sides[i]!;
    cam.position.set(...eye.position);
    const look = new THREE.Vector3(
      eye.position[0] + Math.cos(eye.yaw) * Math.cos(eye.pitch),
      eye.position[1] + Math.sin(eye.yaw) * Math.cos(eye.pitch),
      eye.position[2] + Math.sin(eye.pitch),
    );
    cam.lookAt(look);
  });
}
