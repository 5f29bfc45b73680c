// The wizard's state machine, kept free of DOM concerns so the step
// gating and invalidation rules are directly testable.
//
// Rules:
//  - step 2 is reachable only with city, area, and type chosen
//  - step 3 is reachable only through a successful prediction
//  - area choices are always filtered by the chosen city
//  - changing the city clears the area and any stale result

import type { Metadata, PredictResponse, Selections } from "./types.js";

export type Step = 1 | 2 | 3;

export class WizardState {
  step: Step = 1;
  kota: string | null = null;
  area: string | null = null;
  typeKos: string | null = null;
  facilities = new Set<string>();
  result: PredictResponse | null = null;

  constructor(readonly metadata: Metadata) {}

  areaChoices(): string[] {
    if (this.kota === null) return [];
    return this.metadata.areas_by_city[this.kota] ?? [];
  }

  selectCity(city: string): void {
    if (!this.metadata.cities.includes(city)) {
      throw new Error(`unknown city: ${city}`);
    }
    if (city !== this.kota) {
      this.area = null; // dependent selection is stale now
      this.invalidateResult();
    }
    this.kota = city;
  }

  selectArea(area: string): void {
    if (!this.areaChoices().includes(area)) {
      throw new Error(`area ${area} is not offered for city ${this.kota}`);
    }
    if (area !== this.area) this.invalidateResult();
    this.area = area;
  }

  selectType(typeKos: string): void {
    if (!this.metadata.types.includes(typeKos)) {
      throw new Error(`unknown boarding type: ${typeKos}`);
    }
    if (typeKos !== this.typeKos) this.invalidateResult();
    this.typeKos = typeKos;
  }

  toggleFacility(name: string): void {
    if (this.facilities.has(name)) {
      this.facilities.delete(name);
    } else {
      this.facilities.add(name);
    }
    this.invalidateResult();
  }

  get stepOneComplete(): boolean {
    return this.kota !== null && this.area !== null && this.typeKos !== null;
  }

  toStepTwo(): void {
    if (!this.stepOneComplete) {
      throw new Error("city, area, and boarding type must be chosen first");
    }
    this.step = 2;
  }

  backToStepOne(): void {
    this.step = 1;
  }

  selections(): Selections {
    return {
      kota: this.kota,
      area: this.area,
      typeKos: this.typeKos,
      facilities: [...this.facilities],
    };
  }

  /** Only a successful prediction moves the wizard to step 3. */
  completePrediction(result: PredictResponse): void {
    if (this.step !== 2) {
      throw new Error("predictions are submitted from step 2");
    }
    this.result = result;
    this.step = 3;
  }

  startOver(): void {
    this.step = 1;
    this.kota = null;
    this.area = null;
    this.typeKos = null;
    this.facilities.clear();
    this.result = null;
  }

  private invalidateResult(): void {
    this.result = null;
    if (this.step === 3) this.step = this.stepOneComplete ? 2 : 1;
    if (!this.stepOneComplete) this.step = 1;
  }
}
