"lorem ipsum dolor sit amet consectetur adipiscing elit sed do eiusmod"