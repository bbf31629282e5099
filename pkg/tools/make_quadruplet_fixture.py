"""Regenerate tests/fixtures/quadruplets10.jsonl (ten single-product quadruplets)."""

import json
from pathlib import Path

ITEMS = [
    ("Q01", "A compact blender with a 600 watt motor and two travel cups.",
     ["Does it crush ice? Yes, in small batches.", "Is it loud? Fairly loud on high."],
     ["Makes smoothies in seconds.", "The travel cups are handy.", "Loud but powerful motor.",
      "Easy to rinse after use.", "Crushes ice if you add water.", "Blades feel sturdy.",
      "Small enough for my dorm.", "Lid leaked once."],
     "Powerful little blender for smoothies, loud but easy to clean."),
    ("Q02", "A cast iron skillet, pre seasoned, 12 inches wide.",
     ["Can it go in the oven? Yes, at any temperature.", "Is it heavy? About eight pounds."],
     ["Heavy but heats evenly.", "Seasoning improves with use.", "Perfect sear on steaks.",
      "Handle gets very hot.", "Goes from stove to oven.", "Needs drying after washing.",
      "Will last forever.", "Great cornbread crust."],
     "Heavy skillet that sears well and lasts, mind the hot handle."),
    ("Q03", "A yoga mat made of natural rubber, 5 mm thick.",
     ["Does it smell? Slightly at first.", "Is it slippery? No, grip is strong."],
     ["Grip is excellent even when sweaty.", "Rubber smell fades after a week.", "Cushioned for my knees.",
      "A bit heavy to carry.", "Does not slide on wood floors.", "Edges curl slightly.",
      "Nice thickness for floor work.", "Easy to wipe down."],
     "Grippy cushioned mat with an early smell that fades."),
    ("Q04", "A smart plug that works with voice assistants and schedules.",
     ["Does it need a hub? No hub required.", "Does it support 5 GHz wifi? Only 2.4 GHz."],
     ["Setup took two minutes.", "Schedules run reliably.", "Only works on 2.4 GHz wifi.",
      "Voice control responds quickly.", "App is simple.", "Blocks the second outlet.",
      "Lamp turns on at sunset.", "Cheap way to automate lights."],
     "Easy smart plug with reliable schedules, limited to 2.4 GHz."),
    ("Q05", "A hardcover notebook with dotted pages and a ribbon marker.",
     ["Does ink bleed through? Not with fine pens.", "How many pages? 240 numbered pages."],
     ["Paper is thick and smooth.", "No ghosting with gel pens.", "Lies flat when open.",
      "Ribbon marker frays.", "Numbered pages help indexing.", "Cover scuffs easily.",
      "Great for bullet journals.", "Dots are light and subtle."],
     "Smooth thick paper for journaling, though the cover scuffs."),
    ("Q06", "A dog harness with reflective straps and a front leash clip.",
     ["Does it stop pulling? The front clip helps.", "Is sizing accurate? Measure the chest first."],
     ["Front clip reduced pulling.", "Reflective strips are bright at night.", "Easy to put on.",
      "Runs a little large.", "Padding prevents chafing.", "Buckles feel solid.",
      "My beagle walks calmer now.", "Washes well."],
     "Comfortable harness that curbs pulling and shines at night."),
    ("Q07", "A desk lamp with adjustable color temperature and USB port.",
     ["Can you dim it? Five brightness levels.", "Does the USB port charge phones? Yes, slowly."],
     ["Warm light is easy on eyes.", "Touch controls are responsive.", "USB charging is slow.",
      "Arm holds position well.", "Base is compact.", "Memory keeps my setting.",
      "Cool mode is great for reading.", "Flickers on lowest level."],
     "Flexible desk lamp with gentle light, slow USB charging."),
    ("Q08", "A camping tent for two people with a waterproof rainfly.",
     ["Is it waterproof? Stayed dry in heavy rain.", "How long to pitch? About ten minutes."],
     ["Stayed dry during a storm.", "Pitches in ten minutes.", "Tight fit for two adults.",
      "Poles are lightweight aluminum.", "Vents reduce condensation.", "Stakes bend easily.",
      "Packs small for hiking.", "Zippers run smoothly."],
     "Light waterproof tent that pitches fast, snug for two."),
    ("Q09", "A stainless steel water bottle that keeps drinks cold for 24 hours.",
     ["Is it dishwasher safe? Hand wash recommended.", "Does it sweat? No condensation outside."],
     ["Ice lasts all day.", "No sweating on my desk.", "Lid leaks if not tight.",
      "Fits car cup holders.", "Paint chipped after a drop.", "No metallic taste.",
      "Wide mouth fits ice cubes.", "Keeps coffee hot too."],
     "Bottle keeps drinks cold all day, lid must be tightened."),
    ("Q10", "A wireless mouse with silent clicks and a rechargeable battery.",
     ["How long does a charge last? About a month.", "Does it work on glass? Not reliably."],
     ["Clicks are truly silent.", "Battery lasts a month.", "Struggles on glass desks.",
      "Fits my hand comfortably.", "Receiver stores inside.", "Scroll wheel is smooth.",
      "Connects instantly.", "Side buttons feel cheap."],
     "Quiet comfortable mouse with month long battery life."),
]


def main():
    out = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "quadruplets10.jsonl"
    with out.open("w", encoding="utf-8") as fh:
        for pid, desc, qa, reviews, summary in ITEMS:
            rec = {
                "product_id": pid,
                "mode": "full",
                "pseudo_summary_id": "r0",
                "pseudo_summary": summary,
                "input_review_ids": [f"r{i + 1}" for i in range(len(reviews))],
                "input_reviews": reviews,
                "input_review_sims": [1.0 - 0.05 * i for i in range(len(reviews))],
                "description": desc,
                "qa": qa,
                "ss_score": 1.0,
            }
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    print(out)


if __name__ == "__main__":
    main()
