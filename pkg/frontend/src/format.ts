// Presentation-layer unit formatting: the API speaks millimeters, the UI
// displays centimeters with one decimal.

export function formatCm(valueMm: number): string {
  return `${(valueMm / 10).toFixed(1)} cm`;
}

export function formatClearance(report: { colliding: boolean; distance_mm: number }): string {
  return report.colliding ? 'COLLIDING' : formatCm(report.distance_mm);
}
