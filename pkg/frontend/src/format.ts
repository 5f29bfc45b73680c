// Indonesian Rupiah display formatting: dot thousands separators,
// "Rp 1.000.000".

export function formatRupiah(amount: number): string {
  const value = Math.round(amount);
  const sign = value < 0 ? "-" : "";
  const digits = Math.abs(value).toString();
  const grouped = digits.replace(/\B(?=(\d{3})+(?!\d))/g, ".");
  return `Rp ${sign}${grouped}`;
}

export function formatTimestamp(iso: string): string {
  const date = new Date(iso);
  if (Number.isNaN(date.getTime())) return iso;
  return date.toLocaleString();
}
