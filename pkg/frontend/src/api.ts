/** Typed client for the voxplan service HTTP/JSON API.
 *
 * The service versions center edits with optimistic revisions: every PUT
 * carries If-Match and a stale revision comes back as 409, surfaced here
 * as ConflictError so the UI can prompt reload-and-merge instead of
 * silently dropping edits.
 */

export type Vec3 = [number, number, number];

export interface OccPayload {
  dims: Vec3;
  origin: Vec3;
  classes: string[];
  stride: number;
  voxels: [number, number, number, number][];
}

export interface CenterDto {
  id: number;
  class: string;
  pos: Vec3;
  members: number;
}

export interface CentersPayload {
  revision: number;
  centers: CenterDto[];
}

export interface PatchDto {
  pos: Vec3;
  block: string;
}

export interface PlanSummary {
  revision: number;
  command_count: number;
  conflicts: number;
  fallbacks: number;
  clipped: number;
}

export interface DispatchStatus {
  state: "idle" | "running" | "done" | "failed" | "aborted";
  sent: number;
  total: number;
  failed: number;
  error: string;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** 409: the server holds a newer centers revision than ours. */
export class ConflictError extends ApiError {
  constructor(message: string) {
    super(409, message);
    this.name = "ConflictError";
  }
}

/** 422: the payload failed server-side schema validation. */
export class ValidationError extends ApiError {
  constructor(message: string) {
    super(422, message);
    this.name = "ValidationError";
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(
    path: string,
    init?: RequestInit,
  ): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      const detail = await response.text();
      if (response.status === 409) throw new ConflictError(detail);
      if (response.status === 422) throw new ValidationError(detail);
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  listProjects(): Promise<{ projects: string[] }> {
    return this.request("/projects");
  }

  getOcc(project: string, stride = 1): Promise<OccPayload> {
    const query = stride > 1 ? `?stride=${stride}` : "";
    return this.request(`/projects/${project}/occ${query}`);
  }

  getCenters(project: string): Promise<CentersPayload> {
    return this.request(`/projects/${project}/centers`);
  }

  /** Full-set replacement with compare-and-swap on the revision. */
  putCenters(
    project: string,
    revision: number,
    centers: CenterDto[],
    patches: PatchDto[] = [],
  ): Promise<{ revision: number }> {
    return this.request(`/projects/${project}/centers`, {
      method: "PUT",
      headers: {
        "Content-Type": "application/json",
        "If-Match": String(revision),
      },
      body: JSON.stringify({ centers, patches }),
    });
  }

  generatePlan(project: string): Promise<PlanSummary> {
    return this.request(`/projects/${project}/plan`, { method: "POST" });
  }

  apply(
    project: string,
    options: { dryRun: boolean; throttle?: number },
  ): Promise<{ dry_run: boolean; commands?: string[]; total?: number }> {
    return this.request(`/projects/${project}/apply`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        dry_run: options.dryRun,
        throttle: options.throttle ?? 20,
      }),
    });
  }

  getStatus(project: string): Promise<DispatchStatus> {
    return this.request(`/projects/${project}/status`);
  }
}
