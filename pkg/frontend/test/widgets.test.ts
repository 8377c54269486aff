// @vitest-environment jsdom

/** Answer widget behavior in a DOM. */

import { describe, expect, it, vi } from "vitest";
import {
  FORM_OPTIONS,
  FORM_PROMPT,
  PURCHASE_PROMPT,
  errorBanner,
  formAnswerWidget,
  purchaseWidget,
} from "../src/widgets.js";

describe("form answer widget", () => {
  it("offers exactly four graded choices and no neutral option", () => {
    const widget = formAnswerWidget(() => {});
    const radios = widget.root.querySelectorAll<HTMLInputElement>(
      "input[type=radio]",
    );
    expect(radios.length).toBe(4);
    const labels = Array.from(widget.root.querySelectorAll("label")).map(
      (l) => l.textContent,
    );
    expect(labels).toEqual([
      "Left one is much better",
      "Left one is better",
      "Right one is better",
      "Right one is much better",
    ]);
    for (const label of labels) {
      expect(label!.toLowerCase()).not.toContain("neutral");
      expect(label!.toLowerCase()).not.toContain("same");
    }
    expect(widget.root.textContent).toContain(FORM_PROMPT);
    expect(FORM_OPTIONS.map((o) => o.value)).toEqual([
      "left_much_better",
      "left_better",
      "right_better",
      "right_much_better",
    ]);
  });

  it("confirms once per question, never twice", () => {
    const onConfirm = vi.fn();
    const widget = formAnswerWidget(onConfirm);
    document.body.append(widget.root);
    const radios = widget.root.querySelectorAll<HTMLInputElement>(
      "input[type=radio]",
    );
    const confirm = widget.root.querySelector<HTMLButtonElement>("button")!;

    expect(confirm.disabled).toBe(true);
    confirm.click();
    expect(onConfirm).not.toHaveBeenCalled();

    radios[1].click();
    expect(confirm.disabled).toBe(false);
    confirm.click();
    confirm.click();
    expect(onConfirm).toHaveBeenCalledTimes(1);
    expect(onConfirm).toHaveBeenCalledWith("left_better");

    widget.reset();
    expect(confirm.disabled).toBe(false);
    confirm.click();
    expect(onConfirm).toHaveBeenCalledTimes(2);
    widget.root.remove();
  });
});

describe("purchase widget", () => {
  it("shows the two cars' price and fuel economy on large buttons", () => {
    const widget = purchaseWidget(["$25K", "23/29"], ["$29K", "25/31"], () => {});
    const buttons = widget.root.querySelectorAll("button");
    expect(buttons.length).toBe(2);
    expect(buttons[0].textContent).toContain("$25K");
    expect(buttons[0].textContent).toContain("23/29");
    expect(buttons[1].textContent).toContain("$29K");
    expect(buttons[1].textContent).toContain("25/31");
    expect(widget.root.textContent).toContain(PURCHASE_PROMPT);
  });

  it("locks both buttons after the first click", () => {
    const onChoose = vi.fn();
    const widget = purchaseWidget(["$23K", "23/27"], ["$31K", "26/32"], onChoose);
    document.body.append(widget.root);
    const buttons = widget.root.querySelectorAll<HTMLButtonElement>("button");

    buttons[1].click();
    buttons[1].click();
    buttons[0].click();
    expect(onChoose).toHaveBeenCalledTimes(1);
    expect(onChoose).toHaveBeenCalledWith("right");
    expect(buttons[0].disabled).toBe(true);
    expect(buttons[1].disabled).toBe(true);

    widget.reset();
    expect(buttons[0].disabled).toBe(false);
    buttons[0].click();
    expect(onChoose).toHaveBeenCalledTimes(2);
    expect(onChoose).toHaveBeenLastCalledWith("left");
    widget.root.remove();
  });
});

describe("error banner", () => {
  it("shows and clears without losing its place in the page", () => {
    const banner = errorBanner();
    document.body.append(banner.root);
    expect(banner.root.hidden).toBe(true);

    banner.show("the answer arrived out of order");
    expect(banner.root.hidden).toBe(false);
    expect(banner.root.textContent).toBe("the answer arrived out of order");

    banner.clear();
    expect(banner.root.hidden).toBe(true);
    expect(document.body.contains(banner.root)).toBe(true);
    banner.root.remove();
  });
});
