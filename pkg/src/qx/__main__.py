from qx.cli import main

main()
