// three.js room view: downloaded STL components posed by the client-side
// kinematics, with collision highlighting driven by the server's highlight
// list.  The renderer is injected by main.ts so this class stays testable.

import * as THREE from 'three';

import { MachineInfo, MachineStateDto } from './api.js';
import { attachmentMatrix, componentMatrix, couchMatrix } from './kinematics.js';
import { StlMesh } from './stl.js';

const COMPONENT_COLORS: Record<string, number> = {
  gantry: 0x8899aa,
  collimator: 0x667788,
  couch_top: 0x44aa66,
  couch_base: 0x336644,
  patient: 0xddbb99,
};

const HIGHLIGHT_COLOR = 0xdd2222;

export class RoomViewer {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private readonly bodies = new Map<string, THREE.Mesh>();
  private info: MachineInfo | null = null;

  constructor(aspect = 16 / 9) {
    this.camera = new THREE.PerspectiveCamera(50, aspect, 10, 20000);
    this.camera.position.set(3500, -3500, 2000);
    this.camera.up.set(0, 0, 1);
    this.camera.lookAt(0, 0, 0);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.6));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(2000, -3000, 4000);
    this.scene.add(sun);
  }

  setMachineInfo(info: MachineInfo): void {
    this.info = info;
  }

  private static geometry(mesh: StlMesh): THREE.BufferGeometry {
    const g = new THREE.BufferGeometry();
    g.setAttribute('position', new THREE.BufferAttribute(mesh.positions, 3));
    g.setAttribute('normal', new THREE.BufferAttribute(mesh.normals, 3));
    return g;
  }

  addComponent(id: string, mesh: StlMesh): void {
    this.removeComponent(id);
    const material = new THREE.MeshStandardMaterial({
      color: COMPONENT_COLORS[id] ?? 0x999999,
      metalness: 0.1,
      roughness: 0.8,
    });
    const body = new THREE.Mesh(RoomViewer.geometry(mesh), material);
    body.name = id;
    body.matrixAutoUpdate = false;
    this.bodies.set(id, body);
    this.scene.add(body);
  }

  removeComponent(id: string): void {
    const body = this.bodies.get(id);
    if (body) {
      this.scene.remove(body);
      body.geometry.dispose();
      (body.material as THREE.Material).dispose();
      this.bodies.delete(id);
    }
  }

  componentIds(): string[] {
    return [...this.bodies.keys()];
  }

  /** Re-pose every body from the machine state. */
  pose(state: MachineStateDto, patientOffsetMm?: [number, number, number]): void {
    for (const [id, body] of this.bodies) {
      if (id in COMPONENT_COLORS && id !== 'patient') {
        body.matrix.copy(componentMatrix(id, state));
      } else if (id === 'patient') {
        const off = patientOffsetMm ?? [0, 0, 0];
        body.matrix.copy(
          couchMatrix(state).multiply(new THREE.Matrix4().makeTranslation(...off)),
        );
      } else if (this.info) {
        const att = this.info.attachments.find((a) => a.id === id);
        if (att) {
          const mount = this.info.mounts[att.mount] ?? [0, 0, 0];
          body.matrix.copy(attachmentMatrix(
            att.mount as 'collimator' | 'couch', mount, att.offset_mm, state,
          ));
        }
      }
      body.matrixWorldNeedsUpdate = true;
    }
  }

  /** Tint the listed components red; restore everything else. */
  highlight(ids: Iterable<string>): void {
    const hot = new Set(ids);
    for (const [id, body] of this.bodies) {
      const material = body.material as THREE.MeshStandardMaterial;
      material.color.setHex(
        hot.has(id) ? HIGHLIGHT_COLOR : COMPONENT_COLORS[id] ?? 0x999999,
      );
    }
  }

  highlightedIds(): string[] {
    const out: string[] = [];
    for (const [id, body] of this.bodies) {
      const material = body.material as THREE.MeshStandardMaterial;
      if (material.color.getHex() === HIGHLIGHT_COLOR) {
        out.push(id);
      }
    }
    return out;
  }

  worldPositionOf(id: string): THREE.Vector3 | null {
    const body = this.bodies.get(id);
    if (!body) {
      return null;
    }
    return new THREE.Vector3().setFromMatrixPosition(body.matrix);
  }
}
