// Thin typed client over the simulator's HTTP API.  All distances are in
// millimeters and angles in degrees, matching the service; presentation-level
// unit conversion happens in format.ts.

export interface MachineStateDto {
  gantry_deg: number;
  collimator_deg: number;
  couch_lateral_mm: number;
  couch_longitudinal_mm: number;
  couch_vertical_mm: number;
  couch_rotation_deg: number;
  field_x_mm: number;
  field_y_mm: number;
}

export interface CollisionReportDto {
  source: string;
  target: string;
  colliding: boolean;
  distance_mm: number;
  kind: string;
}

export interface SessionResponse {
  session: string;
  machine: string;
  revision: number;
  state: MachineStateDto;
  attachments: string[];
  patient: string | null;
  collisions?: CollisionReportDto[];
  beam?: CollisionReportDto[];
  any_collision?: boolean;
  beam_intersects_couch?: boolean;
  highlight?: string[];
}

export interface MachineInfo {
  name: string;
  sad_mm: number;
  limits: Record<string, [number, number]>;
  components: Record<string, number>;
  mounts: Record<string, [number, number, number]>;
  attachments: {
    id: string;
    name: string;
    mount: string;
    offset_mm: [number, number, number];
  }[];
}

export interface MeasureResponse {
  session: string;
  revision: number;
  readings_mm: Record<string, number>;
}

// Minimal fetch-shaped transport so tests can substitute a fake server.
export type Transport = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly transport: Transport = (url, init) => fetch(url, init),
    private readonly base: string = '',
  ) {}

  private async json<T>(url: string, init?: RequestInit): Promise<T> {
    const res = await this.transport(this.base + url, init);
    if (!res.ok) {
      throw new ApiError(res.status, await res.text());
    }
    return (await res.json()) as T;
  }

  listMachines(): Promise<{ machines: string[] }> {
    return this.json('/machines');
  }

  machineInfo(name: string): Promise<MachineInfo> {
    return this.json(`/machines/${name}`);
  }

  async componentMesh(machine: string, component: string): Promise<ArrayBuffer> {
    const res = await this.transport(`${this.base}/machines/${machine}/meshes/${component}`);
    if (!res.ok) {
      throw new ApiError(res.status, await res.text());
    }
    return res.arrayBuffer();
  }

  createSession(machine: string): Promise<SessionResponse> {
    return this.json('/sessions', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ machine }),
    });
  }

  putState(session: string, partial: Partial<MachineStateDto>): Promise<SessionResponse> {
    return this.json(`/sessions/${session}/state`, {
      method: 'PUT',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(partial),
    });
  }

  addAttachment(session: string, id: string): Promise<SessionResponse> {
    return this.json(`/sessions/${session}/attachments`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ id }),
    });
  }

  removeAttachment(session: string, id: string): Promise<SessionResponse> {
    return this.json(`/sessions/${session}/attachments/${id}`, { method: 'DELETE' });
  }

  setPhantom(session: string): Promise<SessionResponse> {
    return this.json(`/sessions/${session}/phantom`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({}),
    });
  }

  measurePoints(
    session: string,
    a: [number, number, number],
    b: [number, number, number],
  ): Promise<MeasureResponse> {
    const q = new URLSearchParams({
      ax: String(a[0]), ay: String(a[1]), az: String(a[2]),
      bx: String(b[0]), by: String(b[1]), bz: String(b[2]),
    });
    return this.json(`/sessions/${session}/measure?${q}`);
  }

  collision(session: string): Promise<SessionResponse> {
    return this.json(`/sessions/${session}/collision`);
  }
}
