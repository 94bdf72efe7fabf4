// Browser entry point: wires the DOM controls to the HTTP API, the debounced
// state writer, and the three.js viewer.

import * as THREE from 'three';

import { ApiClient, MachineInfo, SessionResponse } from './api.js';
import { formatCm } from './format.js';
import { parseBinaryStl } from './stl.js';
import { StateSync } from './stateSync.js';
import { applyUpdate, emptyViewState } from './store.js';
import { RoomViewer } from './viewer.js';

const AXES: { key: string; label: string; min: number; max: number; step: number }[] = [
  { key: 'gantry_deg', label: 'Gantry (°)', min: -185, max: 185, step: 0.5 },
  { key: 'collimator_deg', label: 'Collimator (°)', min: -175, max: 175, step: 0.5 },
  { key: 'couch_lateral_mm', label: 'Couch lateral (mm)', min: -280, max: 280, step: 1 },
  { key: 'couch_longitudinal_mm', label: 'Couch long. (mm)', min: -400, max: 400, step: 1 },
  { key: 'couch_vertical_mm', label: 'Couch vertical (mm)', min: -350, max: 500, step: 1 },
  { key: 'couch_rotation_deg', label: 'Couch rotation (°)', min: -95, max: 95, step: 0.5 },
];

const PATIENT_OFFSET: [number, number, number] = [0, -350, 110];

async function boot(): Promise<void> {
  const client = new ApiClient();
  const machineName = (await client.listMachines()).machines[0];
  const info: MachineInfo = await client.machineInfo(machineName);
  const session = await client.createSession(machineName);

  const container = document.getElementById('viewport')!;
  const viewer = new RoomViewer(container.clientWidth / container.clientHeight);
  viewer.setMachineInfo(info);
  const renderer = new THREE.WebGLRenderer({ antialias: true });
  renderer.setSize(container.clientWidth, container.clientHeight);
  container.appendChild(renderer.domElement);

  let view = emptyViewState();
  const banner = document.getElementById('collision-banner')!;

  const sync = new StateSync(client, session.session, (update: SessionResponse) => {
    view = applyUpdate(view, update);
    banner.hidden = !view.bannerVisible;
    banner.textContent = view.bannerText;
    if (view.state) {
      viewer.pose(view.state, PATIENT_OFFSET);
    }
    viewer.highlight(view.highlighted);
  });

  // component meshes
  for (const id of Object.keys(info.components)) {
    viewer.addComponent(id, parseBinaryStl(await client.componentMesh(machineName, id)));
  }

  // axis sliders
  const controls = document.getElementById('controls')!;
  for (const axis of AXES) {
    const row = document.createElement('label');
    row.textContent = axis.label;
    const slider = document.createElement('input');
    slider.type = 'range';
    slider.min = String(info.limits[axis.key]?.[0] ?? axis.min);
    slider.max = String(info.limits[axis.key]?.[1] ?? axis.max);
    slider.step = String(axis.step);
    slider.value = '0';
    slider.addEventListener('input', () => {
      sync.set({ [axis.key]: Number(slider.value) });
    });
    row.appendChild(slider);
    controls.appendChild(row);
  }

  // attachment checkboxes
  const attachmentsBox = document.getElementById('attachments')!;
  for (const att of info.attachments) {
    const row = document.createElement('label');
    row.textContent = att.name;
    const check = document.createElement('input');
    check.type = 'checkbox';
    check.addEventListener('change', async () => {
      const update = check.checked
        ? await client.addAttachment(session.session, att.id)
        : await client.removeAttachment(session.session, att.id);
      if (check.checked) {
        viewer.addComponent(att.id, parseBinaryStl(
          await client.componentMesh(machineName, att.id)));
      } else {
        viewer.removeComponent(att.id);
      }
      sync.apply(update);
    });
    row.prepend(check);
    attachmentsBox.appendChild(row);
  }

  // phantom on the couch
  const phantomUpdate = await client.setPhantom(session.session);
  viewer.addComponent('patient', parseBinaryStl(
    await client.componentMesh(machineName, 'ellipse-phantom')));
  sync.apply(phantomUpdate);

  // measurement probe
  const probeOut = document.getElementById('probe-reading')!;
  document.getElementById('probe-measure')!.addEventListener('click', async () => {
    const num = (id: string) =>
      Number((document.getElementById(id) as HTMLInputElement).value || '0');
    const result = await client.measurePoints(
      session.session,
      [num('ax'), num('ay'), num('az')],
      [num('bx'), num('by'), num('bz')],
    );
    probeOut.textContent = formatCm(result.readings_mm['ad-hoc']);
  });

  // first full render with collision feedback
  sync.apply(await client.putState(session.session, {}));

  function frame(): void {
    renderer.render(viewer.scene, viewer.camera);
    requestAnimationFrame(frame);
  }
  frame();
}

boot().catch((err) => {
  document.getElementById('collision-banner')!.textContent = String(err);
});
