// View-model derived from server responses.  Pure data in, pure data out, so
// the collision-banner / highlight behavior is testable without a DOM.

import { CollisionReportDto, MachineStateDto, SessionResponse } from './api.js';

export interface ViewState {
  machine: string;
  revision: number;
  state: MachineStateDto | null;
  attachments: string[];
  patient: string | null;
  bannerVisible: boolean;
  bannerText: string;
  highlighted: Set<string>;
  collisions: CollisionReportDto[];
  beamWarning: boolean;
}

export function emptyViewState(): ViewState {
  return {
    machine: '',
    revision: -1,
    state: null,
    attachments: [],
    patient: null,
    bannerVisible: false,
    bannerText: '',
    highlighted: new Set(),
    collisions: [],
    beamWarning: false,
  };
}

/** Fold one server response into the view state. */
export function applyUpdate(view: ViewState, update: SessionResponse): ViewState {
  const collisions = update.collisions ?? view.collisions;
  const highlight = update.highlight ?? [...view.highlighted];
  const anyCollision = update.any_collision ?? view.bannerVisible;
  const pairs = collisions
    .filter((r) => r.colliding)
    .map((r) => `${r.source} × ${r.target}`);
  return {
    machine: update.machine,
    revision: update.revision,
    state: update.state,
    attachments: update.attachments,
    patient: update.patient,
    bannerVisible: anyCollision,
    bannerText: anyCollision ? `Collision: ${pairs.join(', ')}` : '',
    highlighted: new Set(highlight),
    collisions,
    beamWarning: update.beam_intersects_couch ?? view.beamWarning,
  };
}
