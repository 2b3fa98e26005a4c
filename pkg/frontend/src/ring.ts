/** Bounded chart series with strictly increasing time. */

export interface ChartPoint {
  subframe: number;
  dlSnrDb: number | null;
  slSnrDb: number | null;
  throughputBps: number;
  mode: string;
  /** true on the first point after a reconnect, so charts can draw a gap */
  gap?: boolean;
}

export class ChartSeries {
  private points: ChartPoint[] = [];

  constructor(readonly capacity: number) {
    if (capacity < 1) throw new Error("capacity must be positive");
  }

  push(point: ChartPoint): void {
    const last = this.points[this.points.length - 1];
    if (last && point.subframe <= last.subframe) {
      throw new Error(
        `chart time must increase: ${point.subframe} after ${last.subframe}`,
      );
    }
    this.points.push(point);
    if (this.points.length > this.capacity) {
      this.points.splice(0, this.points.length - this.capacity);
    }
  }

  all(): readonly ChartPoint[] {
    return this.points;
  }

  get length(): number {
    return this.points.length;
  }

  last(): ChartPoint | undefined {
    return this.points[this.points.length - 1];
  }
}

/** Default window: 60 s of telemetry at one record per 100 ms. */
export const DEFAULT_CHART_CAPACITY = 600;
